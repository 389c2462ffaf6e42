"""Channel allocation for secondary spectrum auctions with conflict graphs."""

from .graph import (
    ConflictStructure,
    Kind,
    Layer,
    Ordering,
    RhoProvenance,
    backward_set,
    exact_rho,
    greedy_ordering,
    is_independent,
    verify_allocation,
    verify_rho_witness,
)
from .lp import FractionalSolution, allocation_to_fractional, build_lp, solve_explicit, solve_with_oracles, value_of
from .rounding import (
    Allocation,
    RandomStream,
    make_feasible,
    round_asymmetric,
    round_unweighted,
    round_weighted_partial,
    solve_end_to_end,
    split_by_bundle_size,
)
from .valuations import Additive, AuctionInstance, Explicit, SingleMinded, UnitDemand, brute_force_opt, demand_query, evaluate

__version__ = "0.1.0"
