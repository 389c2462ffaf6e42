import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import clique, order
from spectrum_auction.graph import ConflictStructure, Layer, exact_rho
from spectrum_auction.instance import build_model, generate
from spectrum_auction.lp import (
    FractionalSolution,
    allocation_to_fractional,
    bidder_prices,
    build_lp,
    lp_violations,
    solve_explicit,
    solve_with_oracles,
    value_of,
)
from spectrum_auction.valuations import (
    Additive,
    AuctionInstance,
    Explicit,
    all_bundles,
    brute_force_opt,
    utility,
)


def unit_singletons(n):
    return AuctionInstance(1, tuple(Additive((1,)) for _ in range(n)))


def test_single_bidder():
    inst = AuctionInstance(1, (Explicit.of({frozenset({0}): 5}),))
    x = solve_explicit(build_lp(inst, ConflictStructure.unweighted(1, []), order(0, rho=1)))
    assert x.objective == pytest.approx(5)
    assert x.entries == {(0, frozenset({0})): pytest.approx(1)}


def test_edge_relaxation_exceeds_integral_optimum():
    g = ConflictStructure.unweighted(2, [(0, 1)])
    x = solve_explicit(build_lp(unit_singletons(2), g, order(0, 1, rho=1)))
    assert x.objective == pytest.approx(2)
    assert brute_force_opt(unit_singletons(2), g)[1] == 1


def test_triangle_rho_one():
    x = solve_explicit(build_lp(unit_singletons(3), clique(3), order(0, 1, 2, rho=1)))
    assert x.objective == pytest.approx(2)
    assert value_of(x, unit_singletons(3)) == pytest.approx(2)


def test_weighted_coefficients_use_wbar():
    g = ConflictStructure.weighted(2, [(0, 1, Fraction(1, 2)), (1, 0, Fraction(1, 4))])
    lp = build_lp(unit_singletons(2), g, order(0, 1, rho=Fraction(1, 2)))
    # x_0 enters the row of bidder 1 with coefficient 3/4
    assert lp.A[lp.row_of(1, 0), 0] == pytest.approx(0.75)
    x = solve_explicit(lp)
    assert x.objective == pytest.approx(1 + 2 / 3)


def test_asymmetric_rows_use_channel_weights():
    g = ConflictStructure.asymmetric([Layer.from_edges(2, [(0, 1)]), Layer.from_edges(2, [])])
    inst = AuctionInstance(2, (Additive((1, 1)), Additive((1, 1))))
    lp = build_lp(inst, g, order(0, 1, rho=Fraction(1, 2)))
    x = solve_explicit(lp)
    # bidder 1's channel-0 row caps bidder 0's channel-0 mass at 1/2:
    # best is half of {0,1} plus half of {1}
    assert x.objective == pytest.approx(1.5 + 2)
    assert not lp_violations(x, g, order(0, 1, rho=Fraction(1, 2)), 2)


def test_bundle_outside_channels_rejected():
    with pytest.raises(ValueError):
        build_lp(unit_singletons(1), ConflictStructure.unweighted(1, []), order(0), bundles=[[frozenset({3})]])


def test_allocation_embedding_examples(tri):
    x = allocation_to_fractional(tri, [set(), set(), set()], 1)
    assert x.entries == {}
    assert value_of(x, unit_singletons(3)) == 0
    x = allocation_to_fractional(tri, [{0}, set(), set()], 1)
    assert value_of(x, unit_singletons(3)) == 1
    with pytest.raises(ValueError):
        allocation_to_fractional(tri, [{0}, {0}, set()], 1)


def test_zero_vector_feasible():
    inst = generate("explicit-weighted", 6, 2, 0)
    m = build_model(inst)
    assert not lp_violations(FractionalSolution({}), m.graph, m.ordering, 2)


def random_fraction_split(x, rng):
    x1 = {key: val * rng.random() for key, val in x.entries.items()}
    x2 = {key: x.entries[key] - x1[key] for key in x1}
    return FractionalSolution(x1), FractionalSolution(x2)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["explicit-unweighted", "explicit-weighted", "asymmetric", "disk"]), st.integers(0, 10_000))
def test_decomposition_property(model, seed):
    inst = generate(model, 7, 3, seed)
    m = build_model(inst)
    x = solve_explicit(build_lp(inst.auction(), m.graph, m.ordering))
    assert not lp_violations(x, m.graph, m.ordering, 3)
    x1, x2 = random_fraction_split(x, np.random.default_rng(seed))
    assert not lp_violations(x1, m.graph, m.ordering, 3)
    assert not lp_violations(x2, m.graph, m.ordering, 3)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["explicit-unweighted", "explicit-weighted", "asymmetric-weighted", "protocol"]), st.integers(0, 10_000))
def test_lp_dominates_brute_force(model, seed):
    inst = generate(model, 5, 2, seed)
    m = build_model(inst)
    x = solve_explicit(build_lp(inst.auction(), m.graph, m.ordering))
    _, opt = brute_force_opt(inst.auction(), m.graph)
    assert x.objective >= float(opt) - 1e-7


@pytest.mark.parametrize("seed", range(8))
def test_oracle_matches_explicit(seed):
    inst = generate("explicit-weighted" if seed % 2 else "disk", 6, 4, seed)
    m = build_model(inst)
    auction = inst.auction()
    full = solve_explicit(build_lp(auction, m.graph, m.ordering))
    cg = solve_with_oracles(auction, m.graph, m.ordering)
    assert cg.objective == pytest.approx(full.objective, rel=1e-6, abs=1e-9)
    # dual feasibility: no bundle prices out above z_v
    prices = bidder_prices(cg.duals, m.graph, m.ordering, 4)
    for v in range(auction.n):
        p = [float(q) for q in prices[v]]
        for T in all_bundles(4):
            assert float(utility(auction.valuations[v], T, p)) <= cg.duals.z[v] + 1e-7


def test_oracle_single_additive_bidder():
    inst = AuctionInstance(2, (Additive((3, 4)),))
    x = solve_with_oracles(inst, ConflictStructure.unweighted(1, []), order(0, rho=1))
    assert x.objective == pytest.approx(7)
    assert x.entries == {(0, frozenset({0, 1})): pytest.approx(1)}


def test_zero_valuations():
    inst = AuctionInstance(2, tuple(Additive((0, 0)) for _ in range(3)))
    g = clique(3)
    assert solve_with_oracles(inst, g, exact_rho(g)).objective == 0
    assert solve_explicit(build_lp(inst, g, exact_rho(g))).objective == 0


def test_every_feasible_allocation_embeds():
    g = ConflictStructure.weighted(4, [(0, 1, Fraction(1, 2)), (1, 2, Fraction(3, 5)), (3, 0, Fraction(2, 5)), (2, 3, Fraction(1, 10))])
    o = exact_rho(g)
    options = [frozenset()] + all_bundles(2)
    for combo in itertools.product(options, repeat=4):
        try:
            x = allocation_to_fractional(g, combo, 2)
        except ValueError:
            continue
        assert not lp_violations(x, g, o, 2)
