"""The inductive-independence LP relaxation, solved explicitly or by column generation.

Variables ``x[v, T]`` say how much of bundle ``T`` bidder ``v`` receives.
Rows are, in order, one packing constraint per (bidder, channel) bounding the
backward conflict mass by ``rho``, then one row per bidder capping its total
at 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import ConflictStructure, Ordering, verify_allocation
from .simplex import solve_packing_lp
from .valuations import AuctionInstance, Explicit, SingleMinded, bundle_key, demand_query

log = logging.getLogger(__name__)

MAX_EXPLICIT_K = 6
MAX_EXPLICIT_COLUMNS = 200_000
CONSTRAINT_TOL = 1e-7
DEMAND_TOL = 1e-7


class NonConvergence(RuntimeError):
    """Column generation hit its round limit before pricing out."""

    def __init__(self, message: str, partial: "FractionalSolution | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass
class DualPrices:
    y: np.ndarray  # shape (n, k), one price per (bidder, channel) row
    z: np.ndarray  # shape (n,)


@dataclass
class FractionalSolution:
    entries: dict[tuple[int, frozenset[int]], float]
    objective: float = 0.0
    duals: DualPrices | None = None
    rounds: int = 0

    def bidder(self, v: int) -> list[tuple[frozenset[int], float]]:
        return sorted(((T, x) for (u, T), x in self.entries.items() if u == v), key=lambda e: bundle_key(e[0]))

    def scaled(self, factor: float) -> "FractionalSolution":
        return FractionalSolution({key: x * factor for key, x in self.entries.items()})


@dataclass
class LPDescription:
    n: int
    k: int
    rho: float
    columns: list[tuple[int, frozenset[int]]]
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    meta: dict = field(default_factory=dict)

    def row_of(self, v: int, j: int) -> int:
        return v * self.k + j

    def cap_row(self, v: int) -> int:
        return self.n * self.k + v


def forward_coefficients(graph: ConflictStructure, ordering: Ordering, k: int) -> list[list[list[tuple[int, float]]]]:
    """``out[j][u]`` lists ``(v, coef)`` for every ``v`` after ``u`` whose channel-``j`` row ``x_u`` enters."""
    pos = ordering.position
    out = []
    cache: dict[int, list[list[tuple[int, float]]]] = {}
    for j, layer in enumerate(graph.channel_layers(k)):
        key = id(layer)
        if key not in cache:
            rows = []
            for u in range(graph.n):
                fw = []
                for v in layer.neighbors(u):
                    if pos[u] < pos[v]:
                        coef = layer.lp_coefficient(u, v)
                        if coef > 0:
                            fw.append((v, float(coef)))
                rows.append(sorted(fw))
            cache[key] = rows
        out.append(cache[key])
    return out


def explicit_bundles(instance: AuctionInstance) -> list[list[frozenset[int]]]:
    """Positive-value bundles per bidder; structured models need ``k <= 6``."""
    out = []
    for v, spec in enumerate(instance.valuations):
        if not isinstance(spec, (Explicit, SingleMinded)) and instance.k > MAX_EXPLICIT_K:
            raise ValueError(
                f"bidder {v}: enumerating bundles needs k <= {MAX_EXPLICIT_K}; use oracle mode or a bundle list"
            )
        out.append(instance.candidate_bundles(v))
    return out


def build_lp(
    instance: AuctionInstance,
    graph: ConflictStructure,
    ordering: Ordering,
    bundles: Sequence[Iterable[frozenset[int]]] | None = None,
) -> LPDescription:
    n, k = instance.n, instance.k
    if graph.n != n or len(ordering.order) != n:
        raise ValueError("instance, graph and ordering disagree on the number of bidders")
    if bundles is None:
        bundles = explicit_bundles(instance)
    fwd = forward_coefficients(graph, ordering, k)
    columns: list[tuple[int, frozenset[int]]] = []
    c: list[float] = []
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for u in range(n):
        for T in sorted(set(map(frozenset, bundles[u])), key=bundle_key):
            if not T:
                continue
            if max(T) >= k or min(T) < 0:
                raise ValueError(f"bundle {sorted(T)} of bidder {u} references a channel outside 0..{k - 1}")
            col = len(columns)
            columns.append((u, T))
            c.append(float(instance.value(u, T)))
            for j in T:
                for v, coef in fwd[j][u]:
                    rows.append(v * k + j)
                    cols.append(col)
                    vals.append(coef)
            rows.append(n * k + u)
            cols.append(col)
            vals.append(1.0)
    m = n * k + n
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m, len(columns)))
    b = np.concatenate([np.full(n * k, float(ordering.rho)), np.ones(n)])
    return LPDescription(n, k, float(ordering.rho), columns, np.asarray(c, dtype=float), A, b)


def solve_explicit(lp: LPDescription, max_columns: int = MAX_EXPLICIT_COLUMNS) -> FractionalSolution:
    if len(lp.columns) > max_columns:
        raise ValueError(f"{len(lp.columns)} columns exceed the cap of {max_columns}")
    res = solve_packing_lp(lp.c, lp.A, lp.b)
    entries = {lp.columns[i]: float(res.x[i]) for i in np.flatnonzero(res.x > 1e-12)}
    duals = DualPrices(res.duals[: lp.n * lp.k].reshape(lp.n, lp.k), res.duals[lp.n * lp.k:])
    return FractionalSolution(entries, res.objective, duals)


def value_of(x: FractionalSolution, instance: AuctionInstance) -> float:
    return float(sum(float(instance.value(v, T)) * val for (v, T), val in x.entries.items()))


def allocation_to_fractional(graph: ConflictStructure, assignment: Sequence[Iterable[int]], k: int) -> FractionalSolution:
    """Indicator vector of a feasible allocation."""
    assignment = [frozenset(b) for b in assignment]
    if not verify_allocation(graph, assignment, k):
        raise ValueError("allocation is not feasible")
    return FractionalSolution({(v, T): 1 for v, T in enumerate(assignment) if T})


def lp_violations(
    x: FractionalSolution,
    graph: ConflictStructure,
    ordering: Ordering,
    k: int,
    tol: float = CONSTRAINT_TOL,
) -> list[tuple]:
    """Constraints of the LP that ``x`` violates (empty list when feasible).

    Integer/Fraction data is compared exactly; floats get ``tol`` slack.
    """
    out: list[tuple] = []
    n = graph.n

    def exceeds(total, bound) -> bool:
        if isinstance(total, float) or isinstance(bound, float):
            return total > bound + tol
        return total > bound

    per_bidder: dict[int, object] = {}
    for (v, T), val in x.entries.items():
        if val < -tol or val > 1 + tol:
            out.append(("range", v, T, val))
        if T and max(T) >= k:
            out.append(("channel", v, T))
        per_bidder[v] = per_bidder.get(v, 0) + val
    for v, total in per_bidder.items():
        if exceeds(total, 1):
            out.append(("bidder", v, total))
    layers = graph.channel_layers(k)
    pos = ordering.position
    for j in range(k):
        layer = layers[j]
        load = [0] * n
        for (u, T), val in x.entries.items():
            if j not in T or not val:
                continue
            for v in layer.neighbors(u):
                if pos[u] < pos[v]:
                    load[v] = load[v] + layer.lp_coefficient(u, v) * val
        for v in range(n):
            if exceeds(load[v], ordering.rho):
                out.append(("packing", v, j, load[v]))
    return out


def bidder_prices(
    duals: DualPrices, graph: ConflictStructure, ordering: Ordering, k: int
) -> np.ndarray:
    """Per-bidder channel prices: dual prices of later rows that bidder enters, times its coefficient."""
    fwd = forward_coefficients(graph, ordering, k)
    prices = np.zeros((graph.n, k))
    for j in range(k):
        for v in range(graph.n):
            prices[v, j] = sum(coef * duals.y[u, j] for u, coef in fwd[j][v])
    return prices


def solve_with_oracles(
    instance: AuctionInstance,
    graph: ConflictStructure,
    ordering: Ordering,
    max_rounds: int | None = None,
) -> FractionalSolution:
    """Column generation: price out new bundles through each bidder's demand query."""
    n, k = instance.n, instance.k
    if max_rounds is None:
        max_rounds = 10 * n * k
    bundles: list[set[frozenset[int]]] = [{frozenset([j]) for j in range(k)} for _ in range(n)]
    x = None
    for rnd in range(1, max_rounds + 1):
        lp = build_lp(instance, graph, ordering, bundles)
        x = solve_explicit(lp)
        prices = bidder_prices(x.duals, graph, ordering, k)
        added = 0
        for v in range(n):
            p = [float(pv) for pv in prices[v]]
            T = demand_query(instance.valuations[v], p)
            if not T or T in bundles[v]:
                continue
            util = float(instance.value(v, T)) - sum(p[j] for j in T)
            if util > x.duals.z[v] + DEMAND_TOL:
                bundles[v].add(T)
                added += 1
        x.rounds = rnd
        log.debug("column generation round %d: objective %.9g, %d new columns", rnd, x.objective, added)
        if not added:
            return x
    raise NonConvergence(f"column generation did not converge in {max_rounds} rounds", x)
