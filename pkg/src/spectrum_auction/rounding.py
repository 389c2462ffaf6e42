"""Randomised rounding of LP solutions into feasible channel allocations.

Unweighted structures: sample, then resolve conflicts in favour of the
earlier bidder.  Weighted structures: sample with half the probability,
resolve only until each bidder's earlier shared mass is below 1/2, then split
the partly-feasible result into feasible candidates and keep the best.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import ConflictStructure, Ordering, ceil_log2, strictly_less, verify_allocation
from .lp import FractionalSolution, build_lp, solve_explicit, solve_with_oracles
from .valuations import AuctionInstance, bundle_key

HALF = Fraction(1, 2)


class RandomStream:
    """Counter-based (Philox) generator; identical seeds give identical streams."""

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        self.seed_sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.generator = np.random.Generator(np.random.Philox(self.seed_sequence))

    def random(self) -> float:
        return float(self.generator.random())

    def spawn(self, count: int) -> list["RandomStream"]:
        return [RandomStream(s) for s in self.seed_sequence.spawn(count)]


@dataclass(frozen=True)
class Allocation:
    assignment: tuple[frozenset[int], ...]
    value: Fraction

    @classmethod
    def of(cls, instance: AuctionInstance, assignment: Iterable[Iterable[int]]) -> "Allocation":
        assignment = tuple(frozenset(b) for b in assignment)
        return cls(assignment, instance.welfare(assignment))

    @classmethod
    def empty(cls, n: int) -> "Allocation":
        return cls((frozenset(),) * n, Fraction(0))


@dataclass
class HalfTrace:
    tentative: list[frozenset[int]]
    resolved: list[frozenset[int]]


def split_by_bundle_size(x: FractionalSolution, k: int) -> tuple[FractionalSolution, FractionalSolution]:
    """Small bundles (``|T| <= sqrt(k)``) go to the first part, the rest to the second."""
    small, large = {}, {}
    for (v, T), val in x.entries.items():
        (small if len(T) ** 2 <= k else large)[(v, T)] = val
    return FractionalSolution(small), FractionalSolution(large)


class _Sampler:
    """Draws one bundle per bidder: ``T`` with probability ``x[v, T] / scale``, else nothing."""

    def __init__(self, x: FractionalSolution, n: int, scale: float):
        per: list[list[tuple[frozenset[int], float]]] = [[] for _ in range(n)]
        for (v, T), val in x.entries.items():
            if val > 0 and T:
                per[v].append((T, float(val)))
        self.tables = []
        for v in range(n):
            entries = sorted(per[v], key=lambda e: bundle_key(e[0]))
            cum = np.cumsum([val / scale for _, val in entries]) if entries else np.zeros(0)
            if cum.size:
                assert cum[-1] <= 1 + 1e-9, f"rounding probabilities of bidder {v} exceed 1"
            self.tables.append(([T for T, _ in entries], cum))

    def sample(self, rng: RandomStream) -> list[frozenset[int]]:
        draws = rng.generator.random(len(self.tables))
        out = []
        for (bundles, cum), u in zip(self.tables, draws):
            i = int(np.searchsorted(cum, u, side="right")) if cum.size else 0
            out.append(bundles[i] if i < len(bundles) else frozenset())
        return out


def shared_mass(graph: ConflictStructure, u: int, v: int, su: frozenset[int], sv: frozenset[int]):
    """Conflict mass between ``u`` and ``v`` given their bundles.

    Symmetric channels: ``wbar(u, v)`` once if the bundles meet.  Asymmetric
    channels: ``wbar_j(u, v)`` summed over every shared channel ``j``.
    """
    common = su & sv
    if not common:
        return 0
    if graph.symmetric:
        return graph.layers[0].wbar_of(u, v)
    return sum((graph.layers[j].wbar_of(u, v) for j in common), 0)


def _conflicts(graph: ConflictStructure, u: int, v: int, su: frozenset[int], sv: frozenset[int]) -> bool:
    common = su & sv
    if not common:
        return False
    if graph.symmetric:
        return graph.layers[0].adjacent(u, v)
    return any(graph.layers[j].adjacent(u, v) for j in common)


def _neighbors(graph: ConflictStructure, v: int) -> set[int]:
    if graph.symmetric:
        return set(graph.layers[0].neighbors(v))
    out: set[int] = set()
    for layer in graph.layers:
        out.update(layer.neighbors(v))
    return out


def resolve_conflicts(tentative: Sequence[frozenset[int]], graph: ConflictStructure, ordering: Ordering) -> list[frozenset[int]]:
    """Walk bidders in order; drop anyone sharing a conflicting channel with an earlier holder."""
    S = list(tentative)
    pos = ordering.position
    for v in ordering.order:
        if not S[v]:
            continue
        for u in _neighbors(graph, v):
            if pos[u] < pos[v] and _conflicts(graph, u, v, S[u], S[v]):
                S[v] = frozenset()
                break
    return S


def earlier_mass(S: Sequence[frozenset[int]], graph: ConflictStructure, ordering: Ordering, v: int):
    pos = ordering.position
    return sum((shared_mass(graph, u, v, S[u], S[v]) for u in _neighbors(graph, v) if pos[u] < pos[v]), 0)


def resolve_partially(tentative: Sequence[frozenset[int]], graph: ConflictStructure, ordering: Ordering) -> list[frozenset[int]]:
    """Drop a bidder once its shared mass with earlier holders reaches 1/2."""
    S = list(tentative)
    for v in ordering.order:
        if S[v] and not strictly_less(earlier_mass(S, graph, ordering, v), HALF):
            S[v] = frozenset()
    return S


def partly_feasible_violations(S: Sequence[frozenset[int]], graph: ConflictStructure, ordering: Ordering) -> list[int]:
    """Bidders whose earlier shared mass is not below 1/2."""
    return [v for v in range(graph.n) if S[v] and not strictly_less(earlier_mass(S, graph, ordering, v), HALF)]


def _scale(factor: float, k: int, rho, asymmetric: bool) -> float:
    base = factor * (k if asymmetric else math.sqrt(k)) * float(rho)
    return max(base, 1.0)


def round_halves(
    x: FractionalSolution,
    graph: ConflictStructure,
    ordering: Ordering,
    k: int,
    rng: RandomStream,
    *,
    factor: float,
    resolve: Callable,
    asymmetric: bool = False,
) -> list[HalfTrace]:
    """Rounding plus resolution on both bundle-size halves, keeping the intermediate states."""
    scale = _scale(factor, k, ordering.rho, asymmetric)
    traces = []
    for half in split_by_bundle_size(x, k):
        tentative = _Sampler(half, graph.n, scale).sample(rng)
        traces.append(HalfTrace(tentative, resolve(tentative, graph, ordering)))
    return traces


def _better(instance: AuctionInstance, traces: list[HalfTrace]) -> Allocation:
    allocs = [Allocation.of(instance, t.resolved) for t in traces]
    return max(allocs, key=lambda a: a.value)  # first wins ties


def round_unweighted(
    x: FractionalSolution, instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering, rng: RandomStream
) -> Allocation:
    if graph.weighted_kind:
        raise ValueError("round_unweighted needs an unweighted structure")
    traces = round_halves(x, graph, ordering, instance.k, rng, factor=2, resolve=resolve_conflicts)
    return _better(instance, traces)


def round_weighted_partial(
    x: FractionalSolution, instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering, rng: RandomStream
) -> Allocation:
    """Partly-feasible allocation (earlier shared mass below 1/2 everywhere)."""
    if not graph.weighted_kind:
        raise ValueError("round_weighted_partial needs a weighted structure")
    traces = round_halves(x, graph, ordering, instance.k, rng, factor=4, resolve=resolve_partially)
    return _better(instance, traces)


def make_feasible_candidates(
    S: Sequence[frozenset[int]], graph: ConflictStructure, ordering: Ordering
) -> list[list[frozenset[int]]]:
    """Split a partly-feasible allocation into feasible candidates.

    Each round starts from the bidders not yet placed, visits them from last
    to first and keeps a bidder iff its shared mass with the round's other
    current holders is below 1; kept bidders are placed, the others wait for
    the next round.  Fewer than half of a round's bidders ever wait.
    """
    S = [frozenset(b) for b in S]
    n = graph.n
    bad = partly_feasible_violations(S, graph, ordering)
    if bad:
        raise ValueError(f"input is not partly feasible at bidders {bad[:5]}")
    pos = ordering.position
    remaining = set(range(n))
    candidates: list[list[frozenset[int]]] = []
    limit = max(1, ceil_log2(n))
    while remaining:
        snapshot = sorted(remaining, key=lambda v: -pos[v])
        members = set(snapshot)
        Si = [S[v] if v in members else frozenset() for v in range(n)]
        for v in snapshot:
            mass = sum(
                (shared_mass(graph, u, v, Si[u], Si[v]) for u in _neighbors(graph, v) if u in members),
                0,
            )
            if strictly_less(mass, 1):
                remaining.discard(v)
            else:
                Si[v] = frozenset()
        assert 2 * len(remaining) < len(snapshot), "candidate round failed to place half of its bidders"
        candidates.append(Si)
    assert len(candidates) <= limit, f"{len(candidates)} candidates exceed ceil(log2 n) = {limit}"
    return candidates


def make_feasible(
    S: Sequence[frozenset[int]], instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering
) -> Allocation:
    candidates = make_feasible_candidates(S, graph, ordering)
    allocs = [Allocation.of(instance, c) for c in candidates]
    total = instance.welfare(S)
    assert sum((a.value for a in allocs), Fraction(0)) == total
    best = max(allocs, key=lambda a: a.value)
    assert best.value * max(1, ceil_log2(graph.n)) >= total
    return best


def round_asymmetric(
    x: FractionalSolution, instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering, rng: RandomStream
) -> Allocation:
    """Per-channel conflicts with probabilities scaled by ``k`` instead of ``sqrt(k)``."""
    k = instance.k
    if graph.weighted_kind:
        traces = round_halves(x, graph, ordering, k, rng, factor=4, resolve=resolve_partially, asymmetric=True)
        return make_feasible(_better(instance, traces).assignment, instance, graph, ordering)
    traces = round_halves(x, graph, ordering, k, rng, factor=2, resolve=resolve_conflicts, asymmetric=True)
    return _better(instance, traces)


def round_once(
    x: FractionalSolution, instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering, rng: RandomStream
) -> Allocation:
    """The rounding pipeline matching the structure's kind."""
    if not graph.symmetric:
        return round_asymmetric(x, instance, graph, ordering, rng)
    if graph.weighted_kind:
        partial = round_weighted_partial(x, instance, graph, ordering, rng)
        return make_feasible(partial.assignment, instance, graph, ordering)
    return round_unweighted(x, instance, graph, ordering, rng)


def guarantee_factor(graph: ConflictStructure, ordering: Ordering, k: int) -> float:
    """Denominator of the expected-value guarantee relative to the LP optimum."""
    n = graph.n
    if not graph.symmetric:
        scale = _scale(2 if not graph.weighted_kind else 4, k, ordering.rho, True)
    else:
        scale = _scale(2 if not graph.weighted_kind else 4, k, ordering.rho, False)
    factor = 4 * scale
    if graph.weighted_kind:
        factor *= max(1, ceil_log2(n))
    return factor


@dataclass
class SolveReport:
    lp_value: float
    value: Fraction
    ratio: float | None
    rho_used: float
    rho_provenance: str
    trials: int
    seed: int
    mode: str
    mean_value: float
    guarantee: float
    lp_rounds: int = 0
    stats: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def solve_lp(instance: AuctionInstance, graph: ConflictStructure, ordering: Ordering, mode: str = "explicit", bundles=None) -> FractionalSolution:
    if mode == "explicit":
        return solve_explicit(build_lp(instance, graph, ordering, bundles))
    if mode == "oracle":
        return solve_with_oracles(instance, graph, ordering)
    raise ValueError(f"unknown mode {mode!r}")


def solve_end_to_end(
    instance: AuctionInstance,
    graph: ConflictStructure,
    ordering: Ordering,
    *,
    trials: int = 100,
    seed: int = 0,
    mode: str = "explicit",
    bundles=None,
    postprocess: Callable[[tuple[frozenset[int], ...]], tuple[Sequence[frozenset[int]], int]] | None = None,
) -> tuple[Allocation, SolveReport]:
    """LP, then the best of ``trials`` independent roundings.

    ``postprocess`` may repair each rounded assignment (returning the new
    assignment and the number of bidders it dropped).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    t0 = time.perf_counter()
    x = solve_lp(instance, graph, ordering, mode, bundles)
    t1 = time.perf_counter()
    best = Allocation.empty(instance.n)
    values = []
    repaired = 0
    for rng in RandomStream(seed).spawn(trials):
        alloc = round_once(x, instance, graph, ordering, rng)
        if postprocess is not None:
            fixed, dropped = postprocess(alloc.assignment)
            repaired += dropped
            alloc = Allocation.of(instance, fixed)
        assert verify_allocation(graph, alloc.assignment, instance.k)
        values.append(float(alloc.value))
        if alloc.value > best.value:
            best = alloc
    t2 = time.perf_counter()
    lp_value = x.objective
    report = SolveReport(
        lp_value=lp_value,
        value=best.value,
        ratio=float(best.value) / lp_value if lp_value > 1e-12 else None,
        rho_used=float(ordering.rho),
        rho_provenance=ordering.provenance.value,
        trials=trials,
        seed=seed,
        mode=mode,
        mean_value=float(np.mean(values)),
        guarantee=guarantee_factor(graph, ordering, instance.k),
        lp_rounds=x.rounds,
        stats={
            "lp_support": len(x.entries),
            "trial_value_min": float(np.min(values)),
            "trial_value_max": float(np.max(values)),
            "postprocess_dropped": repaired,
        },
        timings={"lp_seconds": t1 - t0, "rounding_seconds": t2 - t1},
    )
    return best, report
