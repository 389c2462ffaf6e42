"""Conflict structures derived from wireless interference models in the plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import (
    ConflictStructure,
    Ordering,
    RhoProvenance,
    best_known_rho,
    ceil_log2,
)

# Relative slack on geometric boundary comparisons.
GEOM_RTOL = 1e-12

Point = tuple[float, float]


@dataclass(frozen=True)
class TransmitterScene:
    points: tuple[Point, ...]
    ranges: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.ranges):
            raise ValueError("points and ranges must have equal length")
        if any(not r > 0 for r in self.ranges):
            raise ValueError("transmission radii must be strictly positive")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LinkScene:
    """Sender/receiver pairs with SINR parameters.

    ``powers`` is ``None`` for the power-control variant.
    """

    links: tuple[tuple[Point, Point], ...]
    alpha: float = 2.0
    beta: float = 1.0
    nu: float = 0.0
    powers: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0 or self.nu < 0:
            raise ValueError("need alpha > 0, beta > 0, nu >= 0")
        for s, r in self.links:
            if _dist(s, r) <= 0:
                raise ValueError("every link needs sender != receiver")
        if self.powers is not None:
            if len(self.powers) != len(self.links):
                raise ValueError("one power per link required")
            if any(not p > 0 for p in self.powers):
                raise ValueError("powers must be positive")

    @property
    def n(self) -> int:
        return len(self.links)

    def length(self, i: int) -> float:
        s, r = self.links[i]
        return _dist(s, r)

    def cross(self, i: int, j: int) -> float:
        """Distance from the sender of link ``i`` to the receiver of link ``j``."""
        return _dist(self.links[i][0], self.links[j][1])

    def uniform_powers(self) -> "LinkScene":
        return self._with_powers([1.0] * self.n)

    def linear_powers(self) -> "LinkScene":
        return self._with_powers([self.length(i) ** self.alpha for i in range(self.n)])

    def _with_powers(self, powers: Sequence[float]) -> "LinkScene":
        return LinkScene(self.links, self.alpha, self.beta, self.nu, tuple(powers))


def _dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _decreasing(values: Sequence[float]) -> tuple[int, ...]:
    # ties by bidder id
    return tuple(sorted(range(len(values)), key=lambda i: (-values[i], i)))


def disk_edges(scene: TransmitterScene) -> list[tuple[int, int]]:
    edges = []
    for u in range(scene.n):
        for v in range(u + 1, scene.n):
            reach = scene.ranges[u] + scene.ranges[v]
            if _dist(scene.points[u], scene.points[v]) <= reach * (1 + GEOM_RTOL):
                edges.append((u, v))
    return edges


def disk_graph(scene: TransmitterScene) -> tuple[ConflictStructure, Ordering]:
    """Disk-intersection graph, ordered by decreasing radius (rho <= 5)."""
    graph = ConflictStructure.unweighted(scene.n, disk_edges(scene))
    return graph, Ordering(_decreasing(scene.ranges), 5, RhoProvenance.MODEL_BOUND)


def distance2_disk_graph(scene: TransmitterScene) -> tuple[ConflictStructure, Ordering]:
    """Square of the disk graph; rho is the witnessed value of the radius ordering."""
    n = scene.n
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in disk_edges(scene):
        adj[u].add(v)
        adj[v].add(u)
    edges = set()
    for u in range(n):
        reach = set(adj[u])
        for w in adj[u]:
            reach |= adj[w]
        reach.discard(u)
        edges.update((min(u, v), max(u, v)) for v in reach)
    graph = ConflictStructure.unweighted(n, sorted(edges))
    order = Ordering(_decreasing(scene.ranges), 0, RhoProvenance.MODEL_BOUND)
    rho, witnessed = best_known_rho(graph, order)
    return graph, order.with_rho(rho, witnessed=witnessed)


def protocol_rho_bound(delta: float) -> int:
    return math.ceil(math.pi / math.asin(delta / (2 * (delta + 1)))) - 1


def protocol_graph(scene: LinkScene, delta: float) -> tuple[ConflictStructure, Ordering]:
    """Protocol model: sender ``s'`` disturbs ``(s, r)`` when ``d(s', r) < (1 + delta) d(s, r)``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    n = scene.n
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            hit_i = scene.cross(j, i) < (1 + delta) * scene.length(i) * (1 + GEOM_RTOL)
            hit_j = scene.cross(i, j) < (1 + delta) * scene.length(j) * (1 + GEOM_RTOL)
            if hit_i or hit_j:
                edges.append((i, j))
    graph = ConflictStructure.unweighted(n, edges)
    lengths = [scene.length(i) for i in range(n)]
    return graph, Ordering(_decreasing(lengths), protocol_rho_bound(delta), RhoProvenance.MODEL_BOUND)


def _received(scene: LinkScene, sender_link: int, receiver_link: int) -> float:
    d = scene.cross(sender_link, receiver_link)
    if d <= 0:
        raise ValueError(f"sender of link {sender_link} sits on the receiver of link {receiver_link}")
    return scene.powers[sender_link] / d**scene.alpha


def sinr_check(scene: LinkScene, active: Iterable[int]) -> bool:
    """Does every active receiver meet the SINR threshold?"""
    if scene.powers is None:
        raise ValueError("SINR check needs transmission powers")
    active = list(dict.fromkeys(active))
    for i in active:
        signal = _received(scene, i, i)
        interference = sum(_received(scene, j, i) for j in active if j != i)
        if signal < scene.beta * (interference + scene.nu):
            return False
    return True


def check_monotone_powers(scene: LinkScene, rtol: float = 1e-9) -> None:
    """Raise unless longer links get no less power and no more received signal."""
    n = scene.n
    lengths = [scene.length(i) for i in range(n)]
    for a in range(n):
        for b in range(n):
            if a == b or lengths[a] > lengths[b]:
                continue
            pa, pb = scene.powers[a], scene.powers[b]
            if pa > pb * (1 + rtol):
                raise ValueError(f"power monotonicity violated: links {a}, {b}")
            sa, sb = pa / lengths[a] ** scene.alpha, pb / lengths[b] ** scene.alpha
            if sa < sb * (1 - rtol):
                raise ValueError(f"received-signal monotonicity violated: links {a}, {b}")


def log_rho_bound(n: int, c: float) -> float:
    return c * ceil_log2(n)


def _validated(graph: ConflictStructure, order: tuple[int, ...], bound: float) -> Ordering:
    ordering = Ordering(order, bound, RhoProvenance.MODEL_BOUND)
    rho, witnessed = best_known_rho(graph, ordering)
    if witnessed:
        return ordering.with_rho(max(bound, rho), witnessed=True)
    # beyond exhaustive scale the model bound is used unverified
    return ordering


def fixed_power_epsilon(scene: LinkScene) -> float:
    n = scene.n
    best = math.inf
    for i in range(n):
        own = scene.length(i)
        for j in range(n):
            if i != j:
                best = min(best, (own / scene.cross(j, i)) ** scene.alpha)
    return scene.beta / 2 * best if n > 1 else 0.0


def fixed_power_weights(scene: LinkScene, c: float = 1.0) -> tuple[ConflictStructure, Ordering]:
    """Weighted structure whose independent sets are exactly the SINR-feasible sets."""
    if scene.powers is None:
        raise ValueError("fixed-power weights need powers")
    check_monotone_powers(scene)
    n = scene.n
    for i in range(n):
        for j in range(n):
            if i != j and scene.cross(j, i) <= 0:
                raise ValueError(f"sender of link {j} sits on the receiver of link {i}")
    eps = fixed_power_epsilon(scene)
    scaled_beta = scene.beta / (1 + eps)
    weights = []
    for i in range(n):
        signal = _received(scene, i, i)
        margin = signal - scaled_beta * scene.nu
        if margin <= 0:
            raise ValueError(f"link {i} cannot overcome the noise on its own")
        for j in range(n):
            if j != i:
                w = min(1.0, scaled_beta * _received(scene, j, i) / margin)
                weights.append((j, i, w))
    graph = ConflictStructure.weighted(n, weights)
    lengths = [scene.length(i) for i in range(n)]
    return graph, _validated(graph, _decreasing(lengths), log_rho_bound(n, c))


def power_control_tau(alpha: float, beta: float) -> float:
    return 1.0 / (2 * 3**alpha * (4 * beta + 2))


def power_control_weights(scene: LinkScene, c: float = 1.0) -> tuple[ConflictStructure, Ordering]:
    """One-directional weights from longer to shorter links (powers chosen later)."""
    n = scene.n
    alpha = scene.alpha
    tau = power_control_tau(alpha, scene.beta)
    lengths = [scene.length(i) for i in range(n)]
    order = _decreasing(lengths)
    pos = {v: i for i, v in enumerate(order)}
    weights = []
    for a in range(n):
        s, r = scene.links[a]
        da = lengths[a]
        for b in range(n):
            if a == b or pos[a] > pos[b]:
                continue
            s2, r2 = scene.links[b]
            d_s_r2 = _dist(s, r2)
            d_s2_r = _dist(s2, r)
            if d_s_r2 <= 0 or d_s2_r <= 0:
                raise ValueError(f"zero cross distance between links {a} and {b}")
            w = (min(1.0, da**alpha / d_s_r2**alpha) + min(1.0, da**alpha / d_s2_r**alpha)) / tau
            weights.append((a, b, w))
    graph = ConflictStructure.weighted(n, weights)
    return graph, _validated(graph, order, log_rho_bound(n, c))


def sinr_margins(scene: LinkScene, active: Sequence[int]) -> dict[int, float]:
    """Signal over ``beta * (interference + noise)`` for each active link (>= 1 means decodable)."""
    out = {}
    for i in active:
        need = scene.beta * (sum(_received(scene, j, i) for j in active if j != i) + scene.nu)
        out[i] = math.inf if need == 0 else _received(scene, i, i) / need
    return out


def enforce_sinr(scene: LinkScene, assignment: Sequence[frozenset[int]], k: int) -> tuple[list[frozenset[int]], int]:
    """Drop bidders until every channel meets the raw SINR constraint.

    On each failing channel the link with the smallest margin loses its whole
    bundle (ties: larger id), so channels already checked stay feasible.
    Returns the repaired assignment and the number of bidders dropped.
    """
    out = [frozenset(b) for b in assignment]
    dropped = 0
    for j in range(k):
        while True:
            holders = [v for v, b in enumerate(out) if j in b]
            if sinr_check(scene, holders):
                break
            margins = sinr_margins(scene, holders)
            worst = min(holders, key=lambda v: (margins[v], -v))
            out[worst] = frozenset()
            dropped += 1
    return out, dropped
