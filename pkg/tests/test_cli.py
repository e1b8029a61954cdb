import json
import os

import pytest

from batchswap.cli import main
from batchswap.numerics import Q
from batchswap.scenario import ScenarioError, scenario_from_dict, scenario_to_dict

HERE = os.path.dirname(__file__)
SCENARIOS = os.path.join(HERE, "..", "scenarios")
WORKED = os.path.join(SCENARIOS, "worked.json")
SANDWICH = os.path.join(SCENARIOS, "sandwich.json")
NOSHORT = os.path.join(SCENARIOS, "noshort.json")


def base_doc(**extra):
    doc = {
        "pool": {"x": "100", "y": "100"},
        "orders": [{"user": "a", "side": "BuyX", "amount": "10", "rate": 2, "arrival": 0}],
    }
    doc.update(extra)
    return doc


class TestScenarioParsing:
    def test_round_trip(self):
        sc = scenario_from_dict(base_doc(tiebreak={"mode": "random", "seed": 9}))
        again = scenario_from_dict(scenario_to_dict(sc))
        assert again == sc

    def test_decimal_and_fraction_inputs(self):
        sc = scenario_from_dict(base_doc(orders=[{"user": "a", "side": "SellX", "amount": "2.5", "rate": "1/3"}]))
        o = sc.honest_orders[0]
        assert (o.amount, o.limit_rate, o.id, o.submit_index) == (Q(5, 2), Q(1, 3), "o0", 0)

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"orders": []}, "pool"),
            (base_doc(pool={"x": "0", "y": "1"}), "pool"),
            (base_doc(pool={"x": "1"}), "pool.y"),
            (base_doc(orders=[{"user": "a", "side": "Hold", "amount": 1, "rate": 1}]), "orders[0].side"),
            (base_doc(orders=[{"user": "a", "side": "BuyX", "amount": -1, "rate": 1}]), "orders[0].amount"),
            (base_doc(orders=[{"user": "a", "side": "BuyX", "amount": 1, "rate": "0"}]), "orders[0].rate"),
            (base_doc(orders=[{"user": "a", "side": "BuyX", "amount": 1}]), "orders[0].rate"),
            (base_doc(orders=[{"side": "BuyX", "amount": 1, "rate": 1}]), "orders[0].user"),
            (base_doc(orders=[{"id": "x", "user": "a", "side": "BuyX", "amount": 1, "rate": 1}, {"id": "x", "user": "b", "side": "BuyX", "amount": 1, "rate": 1}]), "orders[1].id"),
            (base_doc(tiebreak={"mode": "random"}), "tiebreak.seed"),
            (base_doc(tiebreak={"mode": "coin"}), "tiebreak.mode"),
            (base_doc(ledger={"a": {"x": "-1", "y": "0"}}), "ledger.a"),
            (base_doc(potential="weighted"), "potential"),
            (base_doc(model="chaos"), "model"),
        ],
    )
    def test_errors_name_the_field(self, doc, field):
        with pytest.raises(ScenarioError) as info:
            scenario_from_dict(doc)
        assert info.value.path == field


def run_cli(tmp_path, *args):
    out = tmp_path / "out.json"
    code = main([*args, "--out", str(out)])
    return code, out.read_text() if out.exists() else ""


class TestCommands:
    def test_run_worked(self, tmp_path):
        code, text = run_cli(tmp_path, "run", "--scenario", WORKED)
        assert code == 0
        records = [json.loads(line) for line in text.splitlines()]
        summary = records[-1]
        assert summary["end_pool"] == {"x": "94", "y": "5000/47"}
        fills = {r["order_id"]: r for r in records if r["record"] == "fill"}
        assert (fills["B"]["dx"], fills["B"]["dy"]) == ("10", "-488/47")

    def test_decimal_column(self, tmp_path):
        code, text = run_cli(tmp_path, "run", "--scenario", WORKED, "--decimal")
        last = json.loads(text.splitlines()[-1])
        assert last["end_pool"]["y"] == "5000/47" and last["end_pool"]["y_decimal"].startswith("106.382978")

    def test_deterministic(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        for path in (a, b):
            assert main(["run", "--scenario", NOSHORT, "--seed", "7", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_run_noshort_needs_ledger(self, tmp_path):
        assert run_cli(tmp_path, "run-noshort", "--scenario", WORKED)[0] == 1
        code, text = run_cli(tmp_path, "run-noshort", "--scenario", NOSHORT)
        assert code == 0 and '"position"' in text

    def test_legacy_run(self, tmp_path):
        code, text = run_cli(tmp_path, "legacy-run", "--scenario", SANDWICH)
        assert code == 0 and '"phase":"sequential"' in text

    def test_demo_sandwich(self, tmp_path):
        code, text = run_cli(tmp_path, "demo-sandwich", "--scenario", SANDWICH)
        report = json.loads(text)
        assert code == 0 and Q(report["front_amount"]) > 0
        num, _, den = report["profit"].partition("/")
        assert int(num) > 0 and int(den or 1) > 0

    def test_search_arb_clean(self, tmp_path):
        code, text = run_cli(tmp_path, "search-arb", "--scenario", WORKED, "--grid-amounts", "1,3", "--max-orders", "2")
        report = json.loads(text)
        assert code == 0 and report["witnesses"] == [] and report["engine"] == "batch"
        assert report["grid"]["amounts"] == ["1", "3"] and "wall_clock_seconds" in report

    def test_search_arb_legacy_reports(self, tmp_path):
        code, text = run_cli(tmp_path, "search-arb", "--scenario", SANDWICH, "--engine", "legacy", "--max-orders", "2")
        assert code == 0 and json.loads(text)["witnesses"]

    def test_search_ic(self, tmp_path):
        code, text = run_cli(tmp_path, "search-ic", "--scenario", WORKED, "--grid-amounts", "1,4")
        report = json.loads(text)
        assert code == 0 and report["counterexamples"] == [] and report["types_checked"] == 2
        code, text = run_cli(tmp_path, "search-ic", "--scenario", NOSHORT, "--max-orders", "1")
        assert code == 0 and json.loads(text)["engine"] == "noshort"

    def test_search_exit_two_on_findings(self, tmp_path, monkeypatch):
        import batchswap.cli as cli

        monkeypatch.setattr(cli, "search_arbitrage", lambda *a, **k: [_FakeWitness()])
        assert run_cli(tmp_path, "search-arb", "--scenario", WORKED)[0] == 2

    @pytest.mark.parametrize(
        "args",
        [
            ["run", "--scenario", "/nonexistent.json"],
            ["run", "--scenario", WORKED, "--eps", "0"],
            ["run", "--scenario", WORKED, "--seed", "-1"],
            ["search-arb", "--scenario", WORKED, "--grid-rates", "1,x"],
            ["search-arb", "--scenario", WORKED, "--max-orders", "-2"],
        ],
    )
    def test_validation_errors(self, tmp_path, args, capsys):
        assert run_cli(tmp_path, *args)[0] == 1
        assert "error" in capsys.readouterr().err

    def test_bad_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", "--scenario", str(bad)]) == 1

    def test_random_seed_flag_changes_nothing_for_arrival(self, tmp_path):
        a = run_cli(tmp_path, "run", "--scenario", WORKED, "--seed", "1")[1]
        b = run_cli(tmp_path, "run", "--scenario", WORKED)[1]
        assert a == b


class _FakeWitness:
    def to_json(self):
        return {"fake": True}
