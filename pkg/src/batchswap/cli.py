"""``batchswap`` command line.

Exit status: 0 on success, 1 on a validation error, 2 when a search finds
witnesses or counterexamples against the batch mechanism.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional, Sequence

from . import kernels
from .adversary import (
    BATCH,
    LEGACY,
    STRATEGIC,
    Engine,
    NoShortEngine,
    Scenario,
    StrategyGrid,
    sandwich_attack,
    search_arbitrage,
    search_ic_deviations,
    search_ic_noshort,
)
from .amm import DomainError
from .model import BatchOutcome, Side, UserType
from .numerics import format_decimal, format_rational, parse_rational
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_FOUND = 0, 1, 2

DEFAULT_AMOUNTS = "1,2,3,4,5"
DEFAULT_RATES = "1/2,1,2,4"
SANDWICH_AMOUNTS = ",".join(str(a) for a in range(1, 41))


class Renderer:
    def __init__(self, decimal: bool):
        self.decimal = decimal

    def num(self, record: dict, key: str, value):
        record[key] = format_rational(value)
        if self.decimal:
            record[key + "_decimal"] = format_decimal(value)

    def pool(self, pool) -> dict:
        out: dict = {}
        self.num(out, "x", pool.x)
        self.num(out, "y", pool.y)
        return out


def trace_records(outcome: BatchOutcome, r: Renderer) -> list[dict]:
    records = []
    for i, step in enumerate(outcome.trace):
        rec = {
            "record": "step",
            "step": i,
            "order_id": step.order_id,
            "parent_id": step.parent_id,
            "user": step.user,
            "phase": step.phase.value,
            "before": r.pool(step.before),
            "after": r.pool(step.after),
        }
        r.num(rec, "dx", step.dx)
        r.num(rec, "dy", step.dy)
        if outcome.ledger_trace:
            pos = outcome.ledger_trace[i]
            rec["position"] = {}
            r.num(rec["position"], "x", pos.x)
            r.num(rec["position"], "y", pos.y)
        records.append(rec)
    for fill in outcome.fills:
        rec = {"record": "fill", "order_id": fill.order_id, "user": fill.user, "side": fill.side.value}
        r.num(rec, "fulfilled", fill.fulfilled)
        if fill.avg_rate is None:
            rec["avg_rate"] = None
        else:
            r.num(rec, "avg_rate", fill.avg_rate)
        rec["phase"] = fill.phase.value
        r.num(rec, "dx", fill.dx)
        r.num(rec, "dy", fill.dy)
        records.append(rec)
    summary = {
        "record": "summary",
        "engine": outcome.engine,
        "start_pool": r.pool(outcome.start_pool),
        "end_pool": r.pool(outcome.end_pool),
        "dominance": outcome.dominance.value if outcome.dominance else None,
        "split": None,
    }
    if outcome.split is not None:
        summary["split"] = {"order_id": outcome.split.order_id}
        r.num(summary["split"], "first", outcome.split.first)
        r.num(summary["split"], "second", outcome.split.second)
    records.append(summary)
    return records


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n" for rec in records)


def _rational_list(text: str, flag: str) -> list:
    try:
        return [parse_rational(part) for part in text.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(flag, str(exc)) from None


def _grid(args, max_orders: int, per_order: bool) -> StrategyGrid:
    try:
        return StrategyGrid(
            amounts=_rational_list(args.grid_amounts or DEFAULT_AMOUNTS, "--grid-amounts"),
            rates=_rational_list(args.grid_rates or DEFAULT_RATES, "--grid-rates"),
            max_orders=args.max_orders if args.max_orders is not None else max_orders,
            per_order_arrivals=per_order,
        )
    except ValueError as exc:
        raise ScenarioError("grid", str(exc)) from None


def _engine_for(args, scenario: Scenario) -> Engine:
    if getattr(args, "engine", None) == "legacy":
        return LEGACY
    if getattr(args, "engine", None) == "batch":
        return BATCH
    return scenario.engine()


def cmd_run(args, scenario: Scenario, r: Renderer) -> int:
    engine = scenario.engine()
    outcome = engine.run(scenario.pool, list(scenario.honest_orders), scenario.tiebreak, scenario.potential)
    _write(args.out, _jsonl(trace_records(outcome, r)))
    return EXIT_OK


def cmd_run_noshort(args, scenario: Scenario, r: Renderer) -> int:
    if scenario.ledger is None:
        raise ScenarioError("ledger", "run-noshort needs a ledger section")
    return cmd_run(args, scenario, r)


def cmd_legacy_run(args, scenario: Scenario, r: Renderer) -> int:
    outcome = LEGACY.run(scenario.pool, list(scenario.honest_orders), scenario.tiebreak, scenario.potential)
    _write(args.out, _jsonl(trace_records(outcome, r)))
    return EXIT_OK


def _report(args, body: dict, started: float) -> None:
    body["backend"] = kernels.BACKEND
    body["wall_clock_seconds"] = round(time.perf_counter() - started, 3)
    _write(args.out, json.dumps(body, sort_keys=True, indent=2) + "\n")


def cmd_demo_sandwich(args, scenario: Scenario, r: Renderer) -> int:
    started = time.perf_counter()
    victims = [o for o in scenario.honest_orders if o.side is Side.BUY_X]
    if not victims:
        raise ScenarioError("orders", "demo-sandwich needs a BuyX victim order")
    victim = victims[0]
    amounts = _rational_list(args.grid_amounts or SANDWICH_AMOUNTS, "--grid-amounts")
    best = sandwich_attack(scenario.pool, victim, amounts, scenario.potential)
    body: dict = {
        "command": "demo-sandwich",
        "engine": LEGACY.id,
        "victim": victim.id,
        "grid": {"amounts": [format_rational(a) for a in sorted(set(amounts))]},
    }
    r.num(body, "front_amount", best.front_amount)
    r.num(body, "profit", best.profit)
    body["trace"] = trace_records(best.outcome, r) if best.outcome is not None else []
    _report(args, body, started)
    return EXIT_OK


def cmd_search_arb(args, scenario: Scenario, r: Renderer) -> int:
    started = time.perf_counter()
    engine = _engine_for(args, scenario)
    grid = _grid(args, 3, per_order=engine is LEGACY)
    stats: dict = {}
    witnesses = search_arbitrage(scenario, grid, engine, stats)
    body = {
        "command": "search-arb",
        "engine": engine.id,
        "model": scenario.model.value,
        "tiebreak": scenario.tiebreak.to_json(),
        "grid": grid.describe(),
        "runs": stats.get("runs", 0),
        "witnesses": [w.to_json() for w in witnesses],
    }
    _report(args, body, started)
    return EXIT_FOUND if witnesses and engine is not LEGACY else EXIT_OK


def _types_to_check(scenario: Scenario) -> list[tuple[UserType, Scenario]]:
    """The declared strategic type, or else each order's owner in turn."""
    if scenario.adversary_type is not None:
        return [(scenario.adversary_type, scenario)]
    out = []
    for order in scenario.honest_orders:
        others = [o for o in scenario.honest_orders if o.id != order.id]
        t = UserType(order.side, order.amount, order.limit_rate, order.arrival)
        out.append((t, Scenario(scenario.pool, others, None, scenario.model, scenario.tiebreak, scenario.potential)))
    return out


def cmd_search_ic(args, scenario: Scenario, r: Renderer) -> int:
    started = time.perf_counter()
    grid = _grid(args, 2, per_order=True)
    stats: dict = {}
    if scenario.ledger is not None:
        if scenario.adversary_type is None:
            raise ScenarioError("adversary", "the no-short-sell IC search needs the strategic user's belief")
        if STRATEGIC not in scenario.ledger:
            raise ScenarioError(f"ledger.{STRATEGIC}", "missing")
        t = scenario.adversary_type
        found = search_ic_noshort(scenario, t.rate, t.arrival, grid, stats)
        engine_id = NoShortEngine.id
        checked = 1
    else:
        engine = _engine_for(args, scenario)
        engine_id = engine.id
        found = []
        pairs = _types_to_check(scenario)
        for t, sc in pairs:
            found.extend(search_ic_deviations(sc, t, grid, engine, stats))
        checked = len(pairs)
    body = {
        "command": "search-ic",
        "engine": engine_id,
        "model": scenario.model.value,
        "grid": grid.describe(),
        "types_checked": checked,
        "runs": stats.get("runs", 0),
        "counterexamples": [c.to_json() for c in found],
    }
    _report(args, body, started)
    return EXIT_FOUND if found and engine_id != LEGACY.id else EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "run-noshort": cmd_run_noshort,
    "legacy-run": cmd_legacy_run,
    "demo-sandwich": cmd_demo_sandwich,
    "search-arb": cmd_search_arb,
    "search-ic": cmd_search_ic,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batchswap", description="Two-phase batch swap simulator and adversary searches.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--seed", type=int, help="seed for random tie-breaking (unsigned 64-bit)")
    parser.add_argument("--eps", help="square-root precision, e.g. 1/18446744073709551616")
    parser.add_argument("--grid-amounts", help="comma-separated rationals")
    parser.add_argument("--grid-rates", help="comma-separated rationals")
    parser.add_argument("--max-orders", type=int, help="largest adversary order set")
    parser.add_argument("--engine", choices=["batch", "legacy"], help="engine for searches (default: from scenario)")
    parser.add_argument("--decimal", action="store_true", help="add display-only decimal columns")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ScenarioError("--seed", "must fit in 64 unsigned bits")
        eps = None
        if args.eps is not None:
            try:
                eps = parse_rational(args.eps)
            except (ValueError, ZeroDivisionError) as exc:
                raise ScenarioError("--eps", str(exc)) from None
            if eps <= 0:
                raise ScenarioError("--eps", "must be positive")
        if args.max_orders is not None and args.max_orders < 0:
            raise ScenarioError("--max-orders", "must be >= 0")
        scenario = load_scenario(args.scenario, args.seed, eps)
        return COMMANDS[args.command](args, scenario, Renderer(args.decimal))
    except (ScenarioError, DomainError, ValueError, OSError) as exc:
        print(f"batchswap: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
