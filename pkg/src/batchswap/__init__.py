"""Two-phase batch swaps for constant-function market makers."""

from .adversary import (
    ArbWitness,
    Model,
    Scenario,
    StrategyGrid,
    arbitrage_to_ic_violation,
    find_arbitrage,
    legacy_sequential_run,
    sandwich_attack,
    search_arbitrage,
    search_ic_deviations,
    search_ic_noshort,
)
from .amm import CONSTANT_PRODUCT, ConstantProduct, PoolState, PotentialFunction, make_potential
from .kernels import BACKEND
from .mechanism import honest_strategy, run_batch
from .model import ARRIVAL_STABLE, BatchOutcome, Order, OrderFill, Outcome, Phase, Side, TieBreak, UserType
from .noshort import Ledger, Position, honest_strategy_noshort, run_batch_noshort
from .numerics import Q, format_rational, parse_rational
from .ordering import Comparison, base_dominates, compare, refutes_dominance, total_value

__version__ = "0.1.0"
