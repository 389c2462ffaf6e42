"""Bidder valuation models, demand queries and the exhaustive welfare oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .graph import ConflictStructure, InstanceTooLarge, Number, strictly_less

Bundle = frozenset  # frozenset[int] of channel ids in 0..k-1

BRUTE_FORCE_CAP = 10**7
MAX_ENUMERATED_K = 20


def bundle_key(bundle: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    """Canonical order: smaller bundles first, then lexicographic channel ids."""
    t = tuple(sorted(bundle))
    return (len(t), t)


def all_bundles(k: int) -> list[frozenset[int]]:
    """Every nonempty bundle over ``k`` channels in canonical order."""
    out = [frozenset(c) for size in range(1, k + 1) for c in itertools.combinations(range(k), size)]
    return out


def _as_value(x) -> Fraction:
    v = Fraction(x) if not isinstance(x, float) else Fraction(str(x))
    if v < 0:
        raise ValueError(f"valuations must be nonnegative, got {x}")
    return v


@dataclass(frozen=True)
class Explicit:
    """Table of bundle values; unlisted bundles are worth 0 (need not be monotone)."""

    table: tuple[tuple[frozenset[int], Fraction], ...]

    def __post_init__(self) -> None:
        seen = set()
        norm = []
        for bundle, value in self.table:
            b = frozenset(bundle)
            if b in seen:
                raise ValueError(f"duplicate bundle {sorted(b)}")
            seen.add(b)
            if b:
                norm.append((b, _as_value(value)))
        object.__setattr__(self, "table", tuple(sorted(norm, key=lambda e: bundle_key(e[0]))))

    @classmethod
    def of(cls, entries: dict) -> "Explicit":
        return cls(tuple((frozenset(b), v) for b, v in entries.items()))

    def value(self, bundle: frozenset[int]) -> Fraction:
        for b, v in self.table:
            if b == bundle:
                return v
        return Fraction(0)


@dataclass(frozen=True)
class Additive:
    """Sum of per-channel values, counting at most ``cap`` best channels if set."""

    values: tuple[Fraction, ...]
    cap: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(_as_value(v) for v in self.values))
        if self.cap is not None and self.cap < 0:
            raise ValueError("cap must be nonnegative")

    def value(self, bundle: frozenset[int]) -> Fraction:
        vals = sorted((self.values[j] for j in bundle if j < len(self.values)), reverse=True)
        if self.cap is not None:
            vals = vals[: self.cap]
        return sum(vals, Fraction(0))


@dataclass(frozen=True)
class SingleMinded:
    bundle: frozenset[int]
    amount: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundle", frozenset(self.bundle))
        object.__setattr__(self, "amount", _as_value(self.amount))
        if not self.bundle:
            raise ValueError("single-minded bidders need a nonempty bundle")

    def value(self, bundle: frozenset[int]) -> Fraction:
        return self.amount if self.bundle <= bundle else Fraction(0)


@dataclass(frozen=True)
class UnitDemand:
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(_as_value(v) for v in self.values))

    def value(self, bundle: frozenset[int]) -> Fraction:
        return max((self.values[j] for j in bundle if j < len(self.values)), default=Fraction(0))


ValuationSpec = Union[Explicit, Additive, SingleMinded, UnitDemand]


def evaluate(spec: ValuationSpec, bundle: Iterable[int]) -> Fraction:
    bundle = frozenset(bundle)
    if not bundle:
        return Fraction(0)
    return spec.value(bundle)


def max_channel(spec: ValuationSpec) -> int:
    """Largest channel id the valuation refers to (-1 if none)."""
    if isinstance(spec, Explicit):
        return max((max(b) for b, _ in spec.table), default=-1)
    if isinstance(spec, SingleMinded):
        return max(spec.bundle)
    return len(spec.values) - 1


def _better(u, key, best_u, best_key) -> bool:
    return u > best_u or (u == best_u and key < best_key)


def _demand_enumerate(spec: ValuationSpec, prices: Sequence[Number], k: int) -> frozenset[int]:
    if k > MAX_ENUMERATED_K:
        raise InstanceTooLarge(f"demand enumeration capped at k <= {MAX_ENUMERATED_K}")
    best, best_u, best_key = frozenset(), 0, bundle_key(())
    for b in all_bundles(k):
        u = evaluate(spec, b) - sum(prices[j] for j in b)
        key = bundle_key(b)
        if _better(u, key, best_u, best_key):
            best, best_u, best_key = b, u, key
    return best


def demand_query(spec: ValuationSpec, prices: Sequence[Number]) -> frozenset[int]:
    """A utility-maximising bundle at ``prices`` (ties: smaller, then lexicographic).

    Structured models are answered in closed form when prices are
    nonnegative; negative prices fall back to enumeration over all bundles.
    """
    k = len(prices)
    if max_channel(spec) >= k:
        raise ValueError(f"price vector has length {k} but the valuation uses channel {max_channel(spec)}")
    if any(p < 0 for p in prices):
        return _demand_enumerate(spec, prices, k)

    if isinstance(spec, Explicit):
        best, best_u, best_key = frozenset(), 0, bundle_key(())
        for b, v in spec.table:
            u = v - sum(prices[j] for j in b)
            key = bundle_key(b)
            if _better(u, key, best_u, best_key):
                best, best_u, best_key = b, u, key
        return best
    if isinstance(spec, SingleMinded):
        u = spec.amount - sum(prices[j] for j in spec.bundle)
        return spec.bundle if u > 0 else frozenset()
    if isinstance(spec, UnitDemand):
        best, best_u = frozenset(), 0
        for j in range(len(spec.values)):
            u = spec.values[j] - prices[j]
            if u > best_u:
                best, best_u = frozenset([j]), u
        return best
    if isinstance(spec, Additive):
        gains = [(spec.values[j] - prices[j], j) for j in range(len(spec.values))]
        chosen = sorted((g for g in gains if g[0] > 0), key=lambda g: (-g[0], g[1]))
        if spec.cap is not None:
            chosen = chosen[: spec.cap]
        return frozenset(j for _, j in chosen)
    raise TypeError(f"unknown valuation {spec!r}")


def utility(spec: ValuationSpec, bundle: Iterable[int], prices: Sequence[Number]):
    bundle = frozenset(bundle)
    return evaluate(spec, bundle) - sum(prices[j] for j in bundle)


@dataclass(frozen=True)
class AuctionInstance:
    k: int
    valuations: tuple[ValuationSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if self.k < 1:
            raise ValueError("need at least one channel")
        for v, spec in enumerate(self.valuations):
            if max_channel(spec) >= self.k:
                raise ValueError(f"bidder {v} values channel {max_channel(spec)} but k={self.k}")

    @property
    def n(self) -> int:
        return len(self.valuations)

    def value(self, v: int, bundle: Iterable[int]) -> Fraction:
        return evaluate(self.valuations[v], bundle)

    def welfare(self, assignment: Sequence[Iterable[int]]) -> Fraction:
        return sum((self.value(v, b) for v, b in enumerate(assignment)), Fraction(0))

    def candidate_bundles(self, v: int) -> list[frozenset[int]]:
        """Bundles with positive value (all of them; enumerated for structured models)."""
        spec = self.valuations[v]
        if isinstance(spec, Explicit):
            return [b for b, val in spec.table if val > 0]
        if isinstance(spec, SingleMinded):
            return [spec.bundle] if spec.amount > 0 else []
        if self.k > MAX_ENUMERATED_K:
            raise InstanceTooLarge(f"bundle enumeration capped at k <= {MAX_ENUMERATED_K}")
        return [b for b in all_bundles(self.k) if spec.value(b) > 0]


def _undominated(instance: AuctionInstance, v: int) -> list[frozenset[int]]:
    # a superset worth no more than a subset never helps: feasibility is downward closed
    cands = instance.candidate_bundles(v)
    vals = {b: instance.value(v, b) for b in cands}
    keep = []
    for b in sorted(cands, key=bundle_key):
        if any(s < b and vals[s] >= vals[b] for s in keep):
            continue
        keep.append(b)
    return keep


def brute_force_opt(
    instance: AuctionInstance, graph: ConflictStructure, cap: int = BRUTE_FORCE_CAP
) -> tuple[tuple[frozenset[int], ...], Fraction]:
    """Welfare-maximising feasible allocation by exhaustive search.

    Depth-first over bidders, each taking the empty set or an undominated
    bundle; partial assignments are pruned as soon as a channel stops being
    independent or the optimistic bound cannot beat the incumbent.  Ties
    resolve to the first optimum found (bidder 0's choices in canonical order,
    empty set last).
    """
    n, k = instance.n, instance.k
    layers = graph.channel_layers(k)
    choices = [_undominated(instance, v) for v in range(n)]
    space = 1
    for c in choices:
        space *= len(c) + 1
        if space > cap:
            raise InstanceTooLarge(f"search space exceeds {cap}")
    values = [[instance.value(v, b) for b in choices[v]] for v in range(n)]
    suffix_best = [Fraction(0)] * (n + 1)
    for v in range(n - 1, -1, -1):
        suffix_best[v] = suffix_best[v + 1] + max(values[v], default=Fraction(0))

    holders: list[list[int]] = [[] for _ in range(k)]
    current: list[frozenset[int]] = [frozenset()] * n
    best_assign = tuple(current)
    best_val = Fraction(-1)

    def fits(v: int, bundle: frozenset[int]) -> bool:
        for j in bundle:
            layer, members = layers[j], holders[j]
            if not layer.weighted:
                if any(layer.adjacent(u, v) for u in members):
                    return False
                continue
            group = members + [v]
            for x in group:
                total = sum((layer.w(u, x) for u in group if u != x), 0)
                if not strictly_less(total, 1):
                    return False
        return True

    def place(v: int, bundle: frozenset[int], sign: int) -> None:
        for j in bundle:
            if sign > 0:
                holders[j].append(v)
            else:
                holders[j].pop()

    def rec(v: int, value: Fraction) -> None:
        nonlocal best_assign, best_val
        if value + suffix_best[v] <= best_val:
            return
        if v == n:
            best_assign, best_val = tuple(current), value
            return
        for bundle, bv in zip(choices[v], values[v]):
            if fits(v, bundle):
                place(v, bundle, +1)
                current[v] = bundle
                rec(v + 1, value + bv)
                current[v] = frozenset()
                place(v, bundle, -1)
        rec(v + 1, value)

    rec(0, Fraction(0))
    return best_assign, best_val
