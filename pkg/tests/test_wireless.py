import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectrum_auction.graph import RhoProvenance, is_independent, verify_rho_witness
from spectrum_auction.wireless import (
    LinkScene,
    TransmitterScene,
    check_monotone_powers,
    disk_graph,
    distance2_disk_graph,
    enforce_sinr,
    fixed_power_epsilon,
    fixed_power_weights,
    power_control_tau,
    power_control_weights,
    protocol_graph,
    protocol_rho_bound,
    sinr_check,
)


def edges_of(g):
    layer = g.layer(0)
    return {(u, v) for v in range(g.n) for u in layer.neighbors(v) if u < v}


def random_disks(rng, n, box=3.0, rmin=0.2, rmax=0.8):
    pts = tuple(map(tuple, rng.uniform(0, box, size=(n, 2))))
    return TransmitterScene(pts, tuple(rng.uniform(rmin, rmax, size=n)))


def random_link_scene(rng, n, box, lmin=0.5, lmax=2.0, alpha=3.0, nu=0.01):
    links = []
    for _ in range(n):
        s = rng.uniform(0, box, size=2)
        ang, length = rng.uniform(0, 2 * math.pi), rng.uniform(lmin, lmax)
        links.append((tuple(s), (s[0] + length * math.cos(ang), s[1] + length * math.sin(ang))))
    return LinkScene(tuple(links), alpha=alpha, beta=1.0, nu=nu)


def test_disk_examples():
    far = TransmitterScene(((0, 0), (5, 0)), (2, 2))
    near = TransmitterScene(((0, 0), (3, 0)), (2, 2))
    tangent = TransmitterScene(((0, 0), (4, 0)), (2, 2))
    assert edges_of(disk_graph(far)[0]) == set()
    assert edges_of(disk_graph(near)[0]) == {(0, 1)}
    assert edges_of(disk_graph(tangent)[0]) == {(0, 1)}


def test_disk_ordering_by_decreasing_radius():
    scene = TransmitterScene(((0, 0), (9, 9), (20, 0)), (0.5, 1.5, 1.5))
    _, o = disk_graph(scene)
    assert o.order == (1, 2, 0)
    assert o.rho == 5 and o.provenance is RhoProvenance.MODEL_BOUND


def test_disk_rho_bound_on_unit_box():
    scene = random_disks(np.random.default_rng(3), 10, rmin=1.0, rmax=1.0)
    g, o = disk_graph(scene)
    assert verify_rho_witness(g, o, 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_disk_edges_exact(seed, n):
    scene = random_disks(np.random.default_rng(seed), n)
    g, o = disk_graph(scene)
    expect = {
        (u, v)
        for u, v in itertools.combinations(range(n), 2)
        if math.dist(scene.points[u], scene.points[v]) <= scene.ranges[u] + scene.ranges[v]
    }
    assert edges_of(g) == expect
    assert verify_rho_witness(g, o, 5)


def test_distance2_examples():
    line = TransmitterScene(((0, 0), (1.5, 0), (3.0, 0)), (1, 1, 1))
    assert edges_of(disk_graph(line)[0]) == {(0, 1), (1, 2)}
    g, o = distance2_disk_graph(line)
    assert edges_of(g) == {(0, 1), (1, 2), (0, 2)}
    assert o.witnessed and verify_rho_witness(g, o, o.rho)
    assert edges_of(distance2_disk_graph(TransmitterScene(((0, 0),), (1,)))[0]) == set()
    assert edges_of(distance2_disk_graph(TransmitterScene(((0, 0), (50, 0)), (1, 1)))[0]) == set()


def test_protocol_examples():
    assert protocol_rho_bound(1) == 12
    same = LinkScene((((0, 0), (1, 0)), ((0, 0), (1, 0))))
    g, o = protocol_graph(same, 1)
    assert edges_of(g) == {(0, 1)}
    apart = LinkScene((((0, 0), (1, 0)), ((100, 0), (101, 0))))
    assert edges_of(protocol_graph(apart, 1)[0]) == set()
    with pytest.raises(ValueError):
        protocol_graph(apart, 0)


def test_protocol_one_sided_conflict_is_an_edge():
    # receiver of link 0 is close to sender of link 1, not the other way
    scene = LinkScene((((0, 0), (1, 0)), ((2.5, 0), (2.5, 0.1))))
    assert edges_of(protocol_graph(scene, 1)[0]) == {(0, 1)}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_protocol_rho_bound_holds(seed, n):
    scene = random_link_scene(np.random.default_rng(seed), n, box=2 * math.sqrt(n), lmin=0.3, lmax=1.0)
    g, o = protocol_graph(scene, 1)
    assert o.rho == 12
    assert verify_rho_witness(g, o, 12)


def test_sinr_examples():
    single = LinkScene((((0, 0), (1, 0)),), alpha=2, beta=1, nu=0.5, powers=(1.0,))
    assert sinr_check(single, [0])
    two = LinkScene((((0, 0), (1, 0)), ((10, 0), (11, 0))), alpha=2, beta=1, nu=0).uniform_powers()
    assert sinr_check(two, [0, 1])
    # co-located twins: SINR is exactly 1, feasible at beta = 1 only
    same = LinkScene((((0, 0), (1, 0)), ((0, 0), (1, 0))), alpha=2, beta=1, nu=0).uniform_powers()
    assert sinr_check(same, [0, 1])
    same = LinkScene(same.links, alpha=2, beta=1.01, nu=0).uniform_powers()
    assert not sinr_check(same, [0, 1])
    assert not sinr_check(LinkScene(same.links, alpha=2, beta=1, nu=0.1).uniform_powers(), [0, 1])
    with pytest.raises(ValueError):
        sinr_check(LinkScene((((0, 0), (1, 0)),)), [0])


def test_fixed_power_examples():
    single = LinkScene((((0, 0), (1, 0)),), alpha=2, beta=1, nu=0).uniform_powers()
    g, _ = fixed_power_weights(single)
    assert is_independent(g, 0, [0])
    two = LinkScene((((0, 0), (1, 0)), ((10, 0), (11, 0))), alpha=2, beta=1, nu=0).uniform_powers()
    g, _ = fixed_power_weights(two)
    assert is_independent(g, 0, [0, 1]) and sinr_check(two, [0, 1])


def test_epsilon_value():
    two = LinkScene((((0, 0), (1, 0)), ((10, 0), (11, 0))), alpha=2, beta=1, nu=0).uniform_powers()
    # closest foreign sender to a receiver: d(s_0, r_1) = 11, d(s_1, r_0) = 9
    assert fixed_power_epsilon(two) == pytest.approx(0.5 / 121)


@pytest.mark.parametrize("seed", range(5))
def test_fixed_power_equivalence_six_links(seed):
    scene = random_link_scene(np.random.default_rng(seed), 6, box=4 * math.sqrt(6)).uniform_powers()
    g, _ = fixed_power_weights(scene)
    for r in range(7):
        for M in itertools.combinations(range(6), r):
            assert is_independent(g, 0, M) == sinr_check(scene, M)


def test_epsilon_band_counterexample():
    # SINR at receiver 0 is 0.9801: below beta, above beta/(1+eps)
    scene = LinkScene((((0, 0), (1, 0)), ((1, 0.99), (1, 1.99))), alpha=2, beta=1, nu=0).uniform_powers()
    g, _ = fixed_power_weights(scene)
    assert not sinr_check(scene, [0, 1])
    assert is_independent(g, 0, [0, 1])
    repaired, dropped = enforce_sinr(scene, [frozenset({0}), frozenset({0})], 1)
    assert dropped == 1 and sinr_check(scene, [v for v, b in enumerate(repaired) if b])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.sampled_from(["uniform", "linear"]))
def test_sinr_feasible_sets_are_independent(seed, n, powers):
    scene = random_link_scene(np.random.default_rng(seed), n, box=2 * math.sqrt(n))
    scene = scene.uniform_powers() if powers == "uniform" else scene.linear_powers()
    try:
        g, _ = fixed_power_weights(scene)
    except ValueError:
        return  # noise-dominated link
    for r in range(n + 1):
        for M in itertools.combinations(range(n), r):
            if sinr_check(scene, M):
                assert is_independent(g, 0, M)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_uniform_and_linear_powers_monotone(seed, n):
    scene = random_link_scene(np.random.default_rng(seed), n, box=5.0)
    check_monotone_powers(scene.uniform_powers())
    check_monotone_powers(scene.linear_powers())


def test_monotonicity_violation_rejected():
    scene = LinkScene((((0, 0), (1, 0)), ((10, 0), (12, 0))), powers=(5.0, 1.0))
    with pytest.raises(ValueError):
        fixed_power_weights(scene)


def test_noise_dominance_rejected():
    scene = LinkScene((((0, 0), (1, 0)),), alpha=2, beta=1, nu=2.0).uniform_powers()
    with pytest.raises(ValueError):
        fixed_power_weights(scene)


def test_power_control_tau():
    assert power_control_tau(2, 1) == pytest.approx(1 / 108)


def test_power_control_colocated_pair():
    scene = LinkScene((((0, 0), (1, 0)), ((0, 0), (1, 0))), alpha=2, beta=1)
    g, o = power_control_weights(scene)
    tau = power_control_tau(2, 1)
    first, second = o.order
    layer = g.layer(0)
    assert layer.w(first, second) == pytest.approx(2 / tau)
    assert layer.w(second, first) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_power_control_weights_one_directional(seed, n):
    scene = random_link_scene(np.random.default_rng(seed), n, box=4.0)
    g, o = power_control_weights(scene)
    tau = power_control_tau(scene.alpha, scene.beta)
    layer = g.layer(0)
    for a in range(n):
        for b in range(n):
            if a != b and not o.before(a, b):
                assert layer.w(a, b) == 0
            assert layer.w(a, b) <= 2 / tau * (1 + 1e-12)


def test_physical_rho_raised_to_witness():
    scene = random_link_scene(np.random.default_rng(0), 8, box=3.0).uniform_powers()
    g, o = fixed_power_weights(scene)
    assert o.witnessed and verify_rho_witness(g, o, o.rho)
    assert o.rho >= math.ceil(math.log2(8))


def test_scene_validation():
    with pytest.raises(ValueError):
        TransmitterScene(((0, 0),), (0.0,))
    with pytest.raises(ValueError):
        LinkScene((((0, 0), (0, 0)),))
