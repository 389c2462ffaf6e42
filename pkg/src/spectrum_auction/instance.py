"""JSON instance files: parsing, emission, model construction and random generation.

Channels and bidder ids are 0-based.  Valuations and explicit weights are
written as decimal (or ``p/q``) strings so they round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .graph import (
    ConflictStructure,
    Layer,
    MAX_EXACT_RHO_N,
    Ordering,
    RhoProvenance,
    best_known_rho,
    exact_rho,
    greedy_ordering,
)
from .valuations import Additive, AuctionInstance, Explicit, SingleMinded, UnitDemand, ValuationSpec
from .wireless import (
    LinkScene,
    TransmitterScene,
    disk_graph,
    distance2_disk_graph,
    fixed_power_weights,
    power_control_weights,
    protocol_graph,
)

CONFLICT_TYPES = (
    "explicit-unweighted",
    "explicit-weighted",
    "disk",
    "distance2-disk",
    "protocol",
    "physical-fixed",
    "physical-powercontrol",
)


class InstanceError(ValueError):
    pass


def fmt_number(x) -> str:
    """Exact string form of a rational: decimal when finite, else ``p/q``."""
    q = Fraction(x)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(q.numerator)
    scaled = q * 10**digits
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def parse_number(x) -> Fraction:
    if isinstance(x, bool):
        raise InstanceError(f"not a number: {x!r}")
    if isinstance(x, float):
        return Fraction(str(x))
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"not a number: {x!r}") from exc


def _bundle(channels) -> list[int]:
    return sorted(int(j) for j in channels)


def valuation_to_json(spec: ValuationSpec) -> dict:
    if isinstance(spec, Explicit):
        return {"type": "explicit", "bundles": [{"channels": _bundle(b), "value": fmt_number(v)} for b, v in spec.table]}
    if isinstance(spec, Additive):
        out = {"type": "additive", "values": [fmt_number(v) for v in spec.values]}
        if spec.cap is not None:
            out["cap"] = spec.cap
        return out
    if isinstance(spec, SingleMinded):
        return {"type": "single-minded", "bundle": _bundle(spec.bundle), "value": fmt_number(spec.amount)}
    if isinstance(spec, UnitDemand):
        return {"type": "unit-demand", "values": [fmt_number(v) for v in spec.values]}
    raise TypeError(f"unknown valuation {spec!r}")


def valuation_from_json(d: dict) -> ValuationSpec:
    kind = d.get("type")
    try:
        if kind == "explicit":
            return Explicit(tuple((frozenset(e["channels"]), parse_number(e["value"])) for e in d["bundles"]))
        if kind == "additive":
            return Additive(tuple(parse_number(v) for v in d["values"]), d.get("cap"))
        if kind == "single-minded":
            return SingleMinded(frozenset(d["bundle"]), parse_number(d["value"]))
        if kind == "unit-demand":
            return UnitDemand(tuple(parse_number(v) for v in d["values"]))
    except KeyError as exc:
        raise InstanceError(f"valuation of type {kind!r} lacks field {exc}") from exc
    raise InstanceError(f"unknown valuation type {kind!r}")


@dataclass(frozen=True)
class InstanceFile:
    k: int
    valuations: tuple[ValuationSpec, ...]
    conflict: dict
    ordering: tuple[int, ...] | None = None
    rho: Fraction | None = None

    @property
    def n(self) -> int:
        return len(self.valuations)

    def auction(self) -> AuctionInstance:
        return AuctionInstance(self.k, self.valuations)

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "k": self.k,
            "bidders": [{"id": v, "valuation": valuation_to_json(s)} for v, s in enumerate(self.valuations)],
            "conflict": self.conflict,
        }
        if self.ordering is not None:
            out["ordering"] = list(self.ordering)
        if self.rho is not None:
            out["rho"] = fmt_number(self.rho)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"


def parse_instance(doc: dict | str) -> InstanceFile:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        k = int(doc["k"])
        bidders = doc["bidders"]
        conflict = doc["conflict"]
    except KeyError as exc:
        raise InstanceError(f"instance lacks field {exc}") from exc
    ids = [b.get("id") for b in bidders]
    if ids != list(range(len(bidders))):
        raise InstanceError("bidder ids must be 0..n-1 in order")
    valuations = tuple(valuation_from_json(b["valuation"]) for b in bidders)
    if conflict.get("type") not in CONFLICT_TYPES:
        raise InstanceError(f"unknown conflict type {conflict.get('type')!r}")
    ordering = doc.get("ordering")
    if ordering is not None:
        ordering = tuple(int(v) for v in ordering)
        if sorted(ordering) != list(range(len(bidders))):
            raise InstanceError("ordering must be a permutation of the bidder ids")
    rho = doc.get("rho")
    inst = InstanceFile(k, valuations, conflict, ordering, None if rho is None else parse_number(rho))
    try:
        inst.auction()
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc
    return inst


def load_instance(path: str) -> InstanceFile:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(json.load(fh))


@dataclass
class Model:
    graph: ConflictStructure
    ordering: Ordering
    scene: TransmitterScene | LinkScene | None = None


def _links(raw) -> tuple:
    return tuple((tuple(map(float, s)), tuple(map(float, r))) for s, r in raw)


def link_scene(conflict: dict) -> LinkScene:
    scene = LinkScene(
        _links(conflict["links"]),
        float(conflict.get("alpha", 2.0)),
        float(conflict.get("beta", 1.0)),
        float(conflict.get("nu", 0.0)),
    )
    powers = conflict.get("powers")
    if powers is None:
        return scene
    if powers == "uniform":
        return scene.uniform_powers()
    if powers == "linear":
        return scene.linear_powers()
    return LinkScene(scene.links, scene.alpha, scene.beta, scene.nu, tuple(float(p) for p in powers))


def _explicit_graph(conflict: dict, n: int, k: int) -> ConflictStructure:
    weighted = conflict["type"] == "explicit-weighted"

    def layer(spec) -> Layer:
        if weighted:
            return Layer.from_weights(n, [(int(u), int(v), parse_number(w)) for u, v, w in spec])
        return Layer.from_edges(n, [(int(u), int(v)) for u, v in spec])

    per_channel = conflict.get("per_channel")
    if per_channel is not None:
        if len(per_channel) != k:
            raise InstanceError(f"per_channel lists {len(per_channel)} layers, expected k={k}")
        return ConflictStructure.asymmetric([layer(spec) for spec in per_channel])
    spec = conflict["weights"] if weighted else conflict["edges"]
    return ConflictStructure.asymmetric([layer(spec)])


def build_model(inst: InstanceFile, rho_override=None) -> Model:
    """Conflict structure and ordering for an instance file."""
    c = inst.conflict
    kind = c["type"]
    n, k = inst.n, inst.k
    scene = None
    try:
        if kind in ("explicit-unweighted", "explicit-weighted"):
            graph = _explicit_graph(c, n, k)
            if inst.ordering is None:
                ordering = exact_rho(graph) if n <= MAX_EXACT_RHO_N else greedy_ordering(graph)
            else:
                ordering = None
        elif kind in ("disk", "distance2-disk"):
            scene = TransmitterScene(
                tuple(tuple(map(float, p)) for p in c["points"]), tuple(float(r) for r in c["ranges"])
            )
            graph, ordering = (disk_graph if kind == "disk" else distance2_disk_graph)(scene)
        elif kind == "protocol":
            scene = link_scene(c)
            graph, ordering = protocol_graph(scene, float(c.get("delta", 1.0)))
        elif kind == "physical-fixed":
            scene = link_scene(c)
            graph, ordering = fixed_power_weights(scene, float(c.get("c", 1.0)))
        else:
            scene = link_scene({**c, "powers": None})
            graph, ordering = power_control_weights(scene, float(c.get("c", 1.0)))
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed conflict description: {exc}") from exc
    if graph.n != n:
        raise InstanceError(f"conflict model has {graph.n} bidders, instance has {n}")
    if inst.ordering is not None:
        base = Ordering(inst.ordering, 0, RhoProvenance.HEURISTIC)
        if inst.rho is None:
            rho, witnessed = best_known_rho(graph, base)
            ordering = base.with_rho(rho, witnessed=witnessed)
        else:
            ordering = base.with_rho(inst.rho)
    elif inst.rho is not None:
        ordering = ordering.with_rho(inst.rho, RhoProvenance.HEURISTIC, witnessed=False)
    if rho_override is not None:
        ordering = ordering.with_rho(rho_override, RhoProvenance.HEURISTIC, witnessed=False)
    return Model(graph, ordering, scene)


# --- random generation ---------------------------------------------------

VALUATION_KINDS = ("explicit", "additive", "single-minded", "unit-demand")


def random_bundle(rng: np.random.Generator, k: int, size: int | None = None) -> frozenset[int]:
    if size is None:
        size = int(rng.integers(1, k + 1))
    return frozenset(int(j) for j in rng.choice(k, size=size, replace=False))


def random_valuation(rng: np.random.Generator, k: int, kind: str, max_bundles: int = 8, max_value: int = 20) -> ValuationSpec:
    if kind == "mixed":
        kind = VALUATION_KINDS[int(rng.integers(len(VALUATION_KINDS)))]
    if kind == "explicit":
        count = min(2**k - 1, int(rng.integers(1, max_bundles + 1)))
        table = {}
        while len(table) < count:
            table[random_bundle(rng, k)] = int(rng.integers(1, max_value + 1))
        return Explicit.of(table)
    if kind == "additive":
        cap = None if rng.random() < 0.5 else int(rng.integers(1, k + 1))
        return Additive(tuple(int(v) for v in rng.integers(0, max_value // 2 + 1, size=k)), cap)
    if kind == "single-minded":
        return SingleMinded(random_bundle(rng, k), int(rng.integers(1, max_value + 1)))
    if kind == "unit-demand":
        return UnitDemand(tuple(int(v) for v in rng.integers(0, max_value + 1, size=k)))
    raise ValueError(f"unknown valuation kind {kind!r}")


def _round6(x: float) -> float:
    return float(f"{x:.6f}")


def random_links(rng: np.random.Generator, n: int, box: float, lmin: float, lmax: float) -> list:
    links = []
    for _ in range(n):
        sx, sy = rng.uniform(0, box, size=2)
        ang = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(lmin, lmax)
        s = [_round6(sx), _round6(sy)]
        r = [_round6(sx + length * math.cos(ang)), _round6(sy + length * math.sin(ang))]
        links.append([s, r])
    return links


def random_conflict(rng: np.random.Generator, model: str, n: int, k: int, params: dict) -> dict:
    p = dict(params)
    if model in ("disk", "distance2-disk"):
        box = float(p.get("box", 1.5 * math.sqrt(max(n, 1))))
        rmin, rmax = float(p.get("rmin", 0.2)), float(p.get("rmax", 0.8))
        pts = [[_round6(a), _round6(b)] for a, b in rng.uniform(0, box, size=(n, 2))]
        ranges = [_round6(r) for r in rng.uniform(rmin, rmax, size=n)]
        return {"type": model, "points": pts, "ranges": ranges}
    if model == "protocol":
        box = float(p.get("box", 2.0 * math.sqrt(max(n, 1))))
        links = random_links(rng, n, box, float(p.get("lmin", 0.3)), float(p.get("lmax", 1.0)))
        return {"type": "protocol", "links": links, "delta": float(p.get("delta", 1.0))}
    if model in ("physical-fixed", "physical-powercontrol"):
        box = float(p.get("box", 4.0 * math.sqrt(max(n, 1))))
        links = random_links(rng, n, box, float(p.get("lmin", 0.5)), float(p.get("lmax", 2.0)))
        out = {
            "type": model,
            "links": links,
            "alpha": float(p.get("alpha", 3.0)),
            "beta": float(p.get("beta", 1.0)),
            "nu": float(p.get("nu", 0.01)),
        }
        if model == "physical-fixed":
            out["powers"] = p.get("powers", "uniform")
        return out
    if model in ("explicit-unweighted", "explicit-weighted", "asymmetric", "asymmetric-weighted"):
        density = float(p.get("density", 0.3))
        weighted = model in ("explicit-weighted", "asymmetric-weighted")
        layers = k if model.startswith("asymmetric") else 1
        specs = []
        for _ in range(layers):
            spec = []
            for u in range(n):
                for v in range(n):
                    if u == v or (not weighted and v < u):
                        continue
                    if rng.random() < density:
                        if weighted:
                            spec.append([u, v, fmt_number(Fraction(int(rng.integers(1, 61)), 100))])
                        else:
                            spec.append([u, v])
            specs.append(spec)
        ctype = "explicit-weighted" if weighted else "explicit-unweighted"
        key = "weights" if weighted else "edges"
        if layers == 1:
            return {"type": ctype, key: specs[0]}
        return {"type": ctype, "per_channel": specs}
    raise ValueError(f"unknown model {model!r}")


GEN_MODELS = (
    "disk",
    "distance2-disk",
    "protocol",
    "physical-fixed",
    "physical-powercontrol",
    "explicit-unweighted",
    "explicit-weighted",
    "asymmetric",
    "asymmetric-weighted",
)


def generate(model: str, n: int, k: int, seed: int, valuation: str = "mixed", **params) -> InstanceFile:
    """Random instance of ``model``; identical arguments give identical instances."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    rng = np.random.default_rng(seed)
    conflict = random_conflict(rng, model, n, k, params)
    max_bundles = int(params.get("max_bundles", 8))
    max_value = int(params.get("max_value", 20))
    valuations = tuple(random_valuation(rng, k, valuation, max_bundles, max_value) for _ in range(n))
    return InstanceFile(k, valuations, conflict)
