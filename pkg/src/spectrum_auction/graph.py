"""Conflict structures, independence tests and inductive-independence orderings.

Bidders are the integers ``0..n-1`` and channels the integers ``0..k-1``.
A structure is either unweighted (an edge set) or weighted (directed
nonnegative weights ``w(u, v)``), and either symmetric (one layer shared by
every channel) or asymmetric (one layer per channel).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Number = Union[int, float, Fraction]

# Tolerance applied to float comparisons; int/Fraction inputs compare exactly.
TOL = 1e-9

# Largest backward neighbourhood examined exhaustively.
MAX_WITNESS_NEIGHBORHOOD = 25
MAX_EXACT_RHO_N = 20


def strictly_less(a: Number, b: Number) -> bool:
    """``a < b``, conservatively by ``TOL`` when either side is a float."""
    if isinstance(a, float) or isinstance(b, float):
        return a < b - TOL
    return a < b


def at_most(a: Number, b: Number) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return a <= b + TOL
    return a <= b


class NeighborhoodTooLarge(ValueError):
    """A backward neighbourhood exceeds the exhaustive-search cap."""


class InstanceTooLarge(ValueError):
    """An exact (exponential) computation was asked for beyond its cap."""


class Kind(enum.Enum):
    UNWEIGHTED = "unweighted"
    WEIGHTED = "weighted"


class RhoProvenance(enum.Enum):
    EXACT = "exact"
    MODEL_BOUND = "model-bound"
    HEURISTIC = "heuristic"


@dataclass(frozen=True, eq=False)
class Layer:
    """Conflict data for one channel (or all channels, if symmetric).

    ``incoming[v][u]`` is ``w(u, v)``; ``wbar[v][u]`` is ``w(u, v) + w(v, u)``.
    For unweighted layers every edge carries weight 1 in both directions.
    """

    n: int
    weighted: bool
    incoming: Mapping[int, Mapping[int, Number]]
    wbar: Mapping[int, Mapping[int, Number]]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Layer":
        inc: dict[int, dict[int, Number]] = {v: {} for v in range(n)}
        for u, v in edges:
            _check_ids(n, (u, v))
            if u == v:
                continue
            inc[v][u] = 1
            inc[u][v] = 1
        wbar = {v: {u: 2 for u in inc[v]} for v in range(n)}
        return cls(n, False, inc, wbar)

    @classmethod
    def from_weights(cls, n: int, weights: Iterable[tuple[int, int, Number]]) -> "Layer":
        inc: dict[int, dict[int, Number]] = {v: {} for v in range(n)}
        for u, v, w in weights:
            _check_ids(n, (u, v))
            if w < 0:
                raise ValueError(f"negative weight w({u},{v}) = {w}")
            if u == v or w == 0:
                continue
            inc[v][u] = inc[v].get(u, 0) + w
        wbar: dict[int, dict[int, Number]] = {v: {} for v in range(n)}
        for v in range(n):
            for u, w in inc[v].items():
                s = w + inc[u].get(v, 0)
                wbar[v][u] = s
                wbar[u][v] = s
        layer = cls(n, True, inc, wbar)
        layer._check_symmetry()
        return layer

    def _check_symmetry(self) -> None:
        for v, row in self.wbar.items():
            for u, s in row.items():
                assert self.wbar[u][v] == s, "symmetrized weights must be symmetric"

    def w(self, u: int, v: int) -> Number:
        return self.incoming[v].get(u, 0)

    def wbar_of(self, u: int, v: int) -> Number:
        return self.wbar[v].get(u, 0)

    def adjacent(self, u: int, v: int) -> bool:
        return u in self.wbar[v]

    def neighbors(self, v: int) -> Iterable[int]:
        return self.wbar[v].keys()

    def lp_coefficient(self, u: int, v: int) -> Number:
        """Coefficient of ``x_u`` in the packing constraint of ``v``."""
        if not self.weighted:
            return 1 if u in self.wbar[v] else 0
        return self.wbar[v].get(u, 0)

    def is_independent(self, members: Iterable[int]) -> bool:
        members = list(dict.fromkeys(members))
        if not self.weighted:
            s = set(members)
            return all(not (s & self.wbar[v].keys()) for v in members)
        for v in members:
            row = self.incoming[v]
            total = sum((row.get(u, 0) for u in members if u != v), 0)
            if not strictly_less(total, 1):
                return False
        return True


def _check_ids(n: int, ids: Iterable[int]) -> None:
    for v in ids:
        if not (isinstance(v, int) and 0 <= v < n):
            raise ValueError(f"unknown bidder id {v!r} (n={n})")


@dataclass(frozen=True, eq=False)
class ConflictStructure:
    """Per-channel conflict data over ``n`` bidders.

    Use the ``unweighted``/``weighted``/``asymmetric`` constructors.
    """

    n: int
    kind: Kind
    layers: tuple[Layer, ...]

    @classmethod
    def unweighted(cls, n: int, edges: Iterable[tuple[int, int]]) -> "ConflictStructure":
        return cls(n, Kind.UNWEIGHTED, (Layer.from_edges(n, edges),))

    @classmethod
    def weighted(cls, n: int, weights: Iterable[tuple[int, int, Number]]) -> "ConflictStructure":
        return cls(n, Kind.WEIGHTED, (Layer.from_weights(n, weights),))

    @classmethod
    def asymmetric(cls, layers: Sequence[Layer]) -> "ConflictStructure":
        if not layers:
            raise ValueError("asymmetric structure needs at least one channel layer")
        n = layers[0].n
        weighted = layers[0].weighted
        if any(l.n != n or l.weighted != weighted for l in layers):
            raise ValueError("channel layers must agree on n and kind")
        kind = Kind.WEIGHTED if weighted else Kind.UNWEIGHTED
        return cls(n, kind, tuple(layers))

    @property
    def weighted_kind(self) -> bool:
        return self.kind is Kind.WEIGHTED

    @property
    def symmetric(self) -> bool:
        return len(self.layers) == 1

    @property
    def channel_count(self) -> int | None:
        """Number of channels fixed by the structure (``None`` if symmetric)."""
        return None if self.symmetric else len(self.layers)

    def layer(self, channel: int) -> Layer:
        if self.symmetric:
            if channel < 0:
                raise ValueError(f"invalid channel id {channel}")
            return self.layers[0]
        if not 0 <= channel < len(self.layers):
            raise ValueError(f"unknown channel id {channel} (k={len(self.layers)})")
        return self.layers[channel]

    def channel_layers(self, k: int) -> list[Layer]:
        if not self.symmetric and k != len(self.layers):
            raise ValueError(f"asymmetric structure has {len(self.layers)} channels, got k={k}")
        return [self.layer(j) for j in range(k)]

    def as_weighted(self) -> "ConflictStructure":
        """The 1/0 weighted embedding of an unweighted structure."""
        if self.weighted_kind:
            return self
        layers = []
        for l in self.layers:
            ws = [(u, v, 1) for v in range(self.n) for u in l.incoming[v]]
            layers.append(Layer.from_weights(self.n, ws))
        return ConflictStructure(self.n, Kind.WEIGHTED, tuple(layers))


@dataclass(frozen=True)
class Ordering:
    """A permutation of the bidders together with an inductive-independence bound.

    ``order[i]`` is the bidder at position ``i`` (position 0 comes first).
    """

    order: tuple[int, ...]
    rho: Number
    provenance: RhoProvenance
    witnessed: bool = False
    position: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        order = tuple(self.order)
        n = len(order)
        if sorted(order) != list(range(n)):
            raise ValueError("ordering must be a permutation of 0..n-1")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        pos = [0] * n
        for i, v in enumerate(order):
            pos[v] = i
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "position", tuple(pos))

    def before(self, u: int, v: int) -> bool:
        return self.position[u] < self.position[v]

    def with_rho(self, rho: Number, provenance: RhoProvenance | None = None, witnessed: bool | None = None) -> "Ordering":
        return Ordering(
            self.order,
            rho,
            self.provenance if provenance is None else provenance,
            self.witnessed if witnessed is None else witnessed,
        )


@dataclass(frozen=True)
class RhoViolation:
    """Witness that an ordering does not achieve a claimed bound."""

    vertex: int
    members: frozenset[int]
    value: Number
    channel: int = 0

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class AllocationViolation:
    channel: int
    vertex: int

    def __bool__(self) -> bool:
        return False


def is_independent(graph: ConflictStructure, channel: int, members: Iterable[int]) -> bool:
    members = list(members)
    _check_ids(graph.n, members)
    return graph.layer(channel).is_independent(members)


def backward_set(graph: ConflictStructure, ordering: Ordering, v: int, channel: int = 0) -> frozenset[int]:
    """Conflicting bidders that precede ``v`` in the ordering."""
    _check_ids(graph.n, (v,))
    layer = graph.layer(channel)
    pv = ordering.position[v]
    return frozenset(u for u in layer.neighbors(v) if ordering.position[u] < pv)


def max_independent_mass(layer: Layer, v: int, candidates: Iterable[int]) -> tuple[Number, frozenset[int]]:
    """Largest ``sum wbar(u, v)`` (or count, unweighted) over independent ``M`` within ``candidates``.

    Branch and bound over include/exclude decisions; candidates that can no
    longer join the current set are dropped, which is valid because
    independence is downward closed.
    """
    if layer.weighted:
        gain = {u: layer.wbar_of(u, v) for u in candidates}
    else:
        gain = {u: 1 for u in candidates if layer.adjacent(u, v)}
    cands = sorted((u for u in gain if gain[u] > 0), key=lambda u: (-gain[u], u))
    best_val: Number = 0
    best_set: frozenset[int] = frozenset()

    def addable(u: int, members: list[int], load: dict[int, Number]) -> bool:
        if not layer.weighted:
            return not any(layer.adjacent(u, m) for m in members)
        into_u = sum((layer.w(m, u) for m in members), 0)
        if not strictly_less(into_u, 1):
            return False
        return all(strictly_less(load[m] + layer.w(u, m), 1) for m in members)

    def rec(rest: list[int], members: list[int], load: dict[int, Number], value: Number) -> None:
        nonlocal best_val, best_set
        if value > best_val:
            best_val, best_set = value, frozenset(members)
        if not rest:
            return
        bound = value + sum((gain[u] for u in rest), 0)
        if bound <= best_val:
            return
        u, tail = rest[0], rest[1:]
        members.append(u)
        new_load = dict(load)
        for m in members[:-1]:
            new_load[m] = load[m] + layer.w(u, m)
        new_load[u] = sum((layer.w(m, u) for m in members[:-1]), 0)
        kept = [c for c in tail if addable(c, members, new_load)]
        rec(kept, members, new_load, value + gain[u])
        members.pop()
        rec(tail, members, load, value)

    rec([u for u in cands if addable(u, [], {})], [], {}, 0)
    return best_val, best_set


def _backward_candidates(layer: Layer, ordering: Ordering, v: int, pool: set[int] | None = None) -> list[int]:
    pv = ordering.position[v]
    return [u for u in layer.neighbors(v) if ordering.position[u] < pv and (pool is None or u in pool)]


def witness_value(graph: ConflictStructure, ordering: Ordering, cap: int = MAX_WITNESS_NEIGHBORHOOD) -> Number:
    """The smallest rho that ``ordering`` certifies (exhaustive; raises beyond ``cap``)."""
    best: Number = 0
    for layer in graph.layers:
        for v in range(graph.n):
            cands = _backward_candidates(layer, ordering, v)
            if len(cands) > cap:
                raise NeighborhoodTooLarge(f"backward set of {v} has {len(cands)} members (cap {cap})")
            val, _ = max_independent_mass(layer, v, cands)
            if val > best:
                best = val
    return best


def verify_rho_witness(
    graph: ConflictStructure, ordering: Ordering, rho: Number, cap: int = MAX_WITNESS_NEIGHBORHOOD
) -> "bool | RhoViolation":
    """``True`` if every backward independent set respects ``rho``, else a violation."""
    if len(ordering.order) != graph.n:
        raise ValueError("ordering size does not match the graph")
    for j, layer in enumerate(graph.layers):
        for v in range(graph.n):
            cands = _backward_candidates(layer, ordering, v)
            if len(cands) > cap:
                raise NeighborhoodTooLarge(f"backward set of {v} has {len(cands)} members (cap {cap})")
            val, members = max_independent_mass(layer, v, cands)
            if not at_most(val, rho):
                return RhoViolation(v, members, val, j)
    return True


def _greedy_from_back(graph: ConflictStructure, score) -> tuple[tuple[int, ...], Number]:
    remaining = set(range(graph.n))
    tail: list[int] = []
    rho: Number = 0
    while remaining:
        best_v, best_s = None, None
        for v in sorted(remaining):
            pool = remaining - {v}
            s = max((score(layer, v, pool) for layer in graph.layers), default=0)
            if best_s is None or s < best_s:
                best_v, best_s = v, s
        tail.append(best_v)
        remaining.discard(best_v)
        if best_s > rho:
            rho = best_s
    return tuple(reversed(tail)), rho


def exact_rho(graph: ConflictStructure, max_n: int = MAX_EXACT_RHO_N) -> Ordering:
    """An ordering attaining the inductive independence number.

    The last position goes to the vertex whose independent mass among the
    remaining vertices is smallest; this is optimal because the objective of
    each vertex only grows with its predecessor set.
    """
    if graph.n > max_n:
        raise InstanceTooLarge(f"exact rho is capped at n <= {max_n}, got {graph.n}")

    def score(layer: Layer, v: int, pool: set[int]) -> Number:
        cands = [u for u in layer.neighbors(v) if u in pool]
        return max_independent_mass(layer, v, cands)[0]

    order, rho = _greedy_from_back(graph, score)
    return Ordering(order, rho, RhoProvenance.EXACT, witnessed=True)


def greedy_ordering(graph: ConflictStructure) -> Ordering:
    """Degeneracy-style ordering; rho is the largest backward ``wbar`` mass (or degree)."""

    def score(layer: Layer, v: int, pool: set[int]) -> Number:
        if not layer.weighted:
            return sum(1 for u in layer.neighbors(v) if u in pool)
        return sum((s for u, s in layer.wbar[v].items() if u in pool), 0)

    order, rho = _greedy_from_back(graph, score)
    return Ordering(order, rho, RhoProvenance.HEURISTIC)


def ordering_bound(graph: ConflictStructure, ordering: Ordering) -> Number:
    """Cheap valid rho for ``ordering``: largest backward degree / ``wbar`` mass."""
    best: Number = 0
    for layer in graph.layers:
        for v in range(graph.n):
            cands = _backward_candidates(layer, ordering, v)
            if layer.weighted:
                s = sum((layer.wbar_of(u, v) for u in cands), 0)
            else:
                s = len(cands)
            best = max(best, s)
    return best


def best_known_rho(graph: ConflictStructure, ordering: Ordering, cap: int = MAX_WITNESS_NEIGHBORHOOD) -> tuple[Number, bool]:
    """Witness value when every neighbourhood is within ``cap``, else the cheap bound.

    Returns ``(rho, witnessed)``.
    """
    try:
        return witness_value(graph, ordering, cap), True
    except NeighborhoodTooLarge:
        return ordering_bound(graph, ordering), False


def verify_allocation(graph: ConflictStructure, assignment: Sequence[Iterable[int]], k: int) -> "bool | AllocationViolation":
    """Check that every channel's holders form an independent set."""
    if len(assignment) != graph.n:
        raise ValueError("allocation must cover every bidder")
    holders: dict[int, list[int]] = {j: [] for j in range(k)}
    for v, bundle in enumerate(assignment):
        for j in bundle:
            if not 0 <= j < k:
                raise ValueError(f"channel id {j} out of range (k={k})")
            holders[j].append(v)
    for j in range(k):
        layer = graph.layer(j)
        members = holders[j]
        if layer.is_independent(members):
            continue
        for v in members:
            if layer.weighted:
                total = sum((layer.w(u, v) for u in members if u != v), 0)
                if not strictly_less(total, 1):
                    return AllocationViolation(j, v)
            elif any(layer.adjacent(u, v) for u in members):
                return AllocationViolation(j, v)
    return True


def brute_force_rho(graph: ConflictStructure) -> Number:
    """Minimum witness value over all ``n!`` orderings (tiny graphs only)."""
    if graph.n > 8:
        raise InstanceTooLarge("brute-force rho is limited to n <= 8")
    best = None
    for perm in itertools.permutations(range(graph.n)):
        val = witness_value(graph, Ordering(perm, 0, RhoProvenance.HEURISTIC))
        if best is None or val < best:
            best = val
    return 0 if best is None else best


def ceil_log2(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0
