import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from torsion.errors import BadEulerChain, EndpointMismatch, NotACycle, NotAcyclic, NotFlat
from torsion.morse_turaev import (
    CSChain,
    EulerChain,
    LocalSystem,
    circle,
    cs_between,
    cs_compose,
    euler_transform_check,
    h1_class,
    h1_group,
    lens_character,
    lens_space,
    lens_torsion_modulus,
    pair_det_rep,
    random_lens_rep,
    random_torus_rep,
    reroute,
    spider_for_euler_chain,
    subdivided_circle,
    three_torus,
    tree_spider,
    turaev_torsion,
    twisted_boundary,
)

seeds = st.integers(0, 2**32 - 1)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def circle_system(u):
    return LocalSystem.from_matrices({"t": [[u]]})


# ---------------------------------------------------------------- cell structures

@pytest.mark.parametrize("cw", [circle(), subdivided_circle(3), lens_space(5, 1), lens_space(7, 3), three_torus()])
def test_integer_boundaries_square_to_zero(cw):
    for j in range(2, cw.n + 1):
        assert not np.any(cw.integer_boundary(j - 1) @ cw.integer_boundary(j))


def test_euler_characteristics():
    assert circle().euler_characteristic == 0
    assert lens_space(5, 1).euler_characteristic == 0
    assert three_torus().euler_characteristic == 0


def test_homology_groups():
    g = h1_group(circle())
    assert (g.free_rank, g.torsion) == (1, ())
    g = h1_group(lens_space(5, 1))
    assert (g.free_rank, g.torsion) == (0, (5,))
    g = h1_group(three_torus())
    assert (g.free_rank, g.torsion) == (3, ())
    g = h1_group(subdivided_circle(4))
    assert (g.free_rank, g.torsion) == (1, ())


# ---------------------------------------------------------------- twisted complexes

def test_circle_twisted_complex():
    u = 0.3 + 0.8j
    tc = twisted_boundary(circle(), circle_system(u))
    # the dual system transports by the inverse transpose
    assert tc.boundaries[0] == pytest.approx(np.array([[1 / u - 1]]))
    assert tc.is_acyclic


def test_trivial_circle_not_acyclic():
    tc = twisted_boundary(circle(), circle_system(1.0))
    assert not tc.is_acyclic
    with pytest.raises(NotAcyclic):
        turaev_torsion(circle(), circle_system(1.0))


def test_lens_twisted_complex():
    cw = lens_space(5, 1)
    z = np.exp(2j * np.pi / 5)
    tc = twisted_boundary(cw, lens_character(cw, 5, 1))
    d1, d2, d3 = (b[0, 0] for b in tc.boundaries)
    assert d1 == pytest.approx(np.conj(z) - 1)
    assert abs(d2) < 1e-12
    assert d3 == pytest.approx(np.conj(z) - 1)
    assert tc.is_acyclic


@pytest.mark.parametrize("p,q", [(5, 1), (7, 1), (7, 3), (5, 2)])
def test_exact_complex_squares_to_zero(p, q):
    cw = lens_space(p, q)
    tc = twisted_boundary(cw, lens_character(cw, p, 1), exact=True)
    assert tc.cochain.is_acyclic


def test_non_flat_rejected():
    rng = np.random.default_rng(0)
    mats = {e: rng.normal(size=(2, 2)) + 2 * np.eye(2) for e in ("x", "y", "z")}
    with pytest.raises(NotFlat):
        twisted_boundary(three_torus(), LocalSystem.from_matrices(mats))


# ---------------------------------------------------------------- torsion values

def test_circle_torsion():
    u = 0.6 + 0.8j
    tau = turaev_torsion(circle(), circle_system(u))
    assert tau == pytest.approx(1 / u - 1)
    assert abs(tau) == pytest.approx(abs(u - 1))


def test_lens_value():
    cw = lens_space(5, 1)
    assert abs(turaev_torsion(cw, lens_character(cw, 5, 1))) == pytest.approx((2 * np.sin(np.pi / 5)) ** 2)
    assert abs(turaev_torsion(cw, lens_character(cw, 5, 1))) == pytest.approx(1.3819660112501)


@pytest.mark.parametrize("p,q", [(5, 1), (7, 1), (7, 3), (7, 2), (11, 4)])
def test_lens_moduli(p, q):
    cw = lens_space(p, q)
    qbar = pow(q, -1, p)
    for a in range(1, p):
        z = np.exp(2j * np.pi * a / p)
        direct = abs(z - 1) * abs(z ** qbar - 1)
        tau = turaev_torsion(cw, lens_character(cw, p, a))
        assert rel(abs(tau), direct) < 1e-9
        assert rel(abs(tau), lens_torsion_modulus(p, q, a)) < 1e-9


@pytest.mark.parametrize("p,q,a", [(5, 1, 1), (5, 1, 3), (7, 3, 2)])
def test_exact_lens_torsion(p, q, a):
    cw = lens_space(p, q)
    ls = lens_character(cw, p, a)
    exact = turaev_torsion(cw, ls, exact=True)
    assert abs(complex(sp.N(exact, 30)) - turaev_torsion(cw, ls)) < 1e-12


def test_unimodular_base_change():
    rng = np.random.default_rng(1)
    ls = random_torus_rep(rng, 2)
    T = np.array([[2.0, 1.0], [1.0, 1.0]])
    cw = three_torus()
    assert rel(turaev_torsion(cw, ls, base_basis=T), turaev_torsion(cw, ls)) < 1e-10


def test_unitary_torus_modulus_one():
    rng = np.random.default_rng(2)
    ls = random_torus_rep(rng, 2, unitary=True)
    assert abs(turaev_torsion(three_torus(), ls)) == pytest.approx(1.0)


def test_subdivision_preserves_modulus():
    u = np.exp(0.7j) * 1.3
    m = 4
    ls = LocalSystem.from_matrices({f"e{i}": [[u if i == m - 1 else 1.0]] for i in range(m)})
    fine = turaev_torsion(subdivided_circle(m), ls)
    coarse = turaev_torsion(circle(), circle_system(u))
    assert rel(abs(fine), abs(coarse)) < 1e-12
    assert rel(fine, coarse) < 1e-12 or rel(fine, -coarse) < 1e-12


# ---------------------------------------------------------------- pairings and Euler structures

def test_pairing_basics():
    u = 0.4 + 1.1j
    cw = circle()
    ls = circle_system(u)
    assert pair_det_rep(cw, ls, {}) == 1
    assert pair_det_rep(cw, ls, {"t": 1}) == pytest.approx(u)
    cw5 = lens_space(5, 1)
    # the 2-cell boundary is 5 t
    assert pair_det_rep(cw5, lens_character(cw5, 5, 2), {"t": 5}) == pytest.approx(1.0)


def test_pairing_rejects_non_cycle():
    with pytest.raises(NotACycle):
        pair_det_rep(subdivided_circle(3), LocalSystem.from_matrices({f"e{i}": [[2.0]] for i in range(3)}), {"e0": 1})


@given(seeds)
def test_pairing_is_a_homomorphism(seed):
    rng = np.random.default_rng(seed)
    cw = three_torus()
    ls = random_torus_rep(rng, 2)
    a = {e: int(rng.integers(-3, 4)) for e in ("x", "y", "z")}
    b = {e: int(rng.integers(-3, 4)) for e in ("x", "y", "z")}
    s = {e: a[e] + b[e] for e in a}
    assert rel(pair_det_rep(cw, ls, s), pair_det_rep(cw, ls, a) * pair_det_rep(cw, ls, b)) < 1e-10


def test_shift_rule_examples():
    u = 0.5 - 0.9j
    cw = circle()
    ls = circle_system(u)
    e = tree_spider(cw).euler_chain(cw)
    shifted, base, pairing = euler_transform_check(cw, ls, e, {})
    assert shifted == pytest.approx(base)
    shifted, base, pairing = euler_transform_check(cw, ls, e, {"t": 1})
    assert shifted / base == pytest.approx(u)
    cw5 = lens_space(5, 1)
    ls5 = lens_character(cw5, 5, 1)
    e5 = tree_spider(cw5).euler_chain(cw5)
    shifted, base, _ = euler_transform_check(cw5, ls5, e5, {"t": 1})
    assert shifted / base == pytest.approx(np.exp(2j * np.pi / 5))


@given(seeds)
def test_shift_rule_torus(seed):
    rng = np.random.default_rng(seed)
    cw = three_torus()
    ls = random_torus_rep(rng, 2)
    h = {e: int(rng.integers(-2, 3)) for e in ("x", "y", "z")}
    shifted, base, pairing = euler_transform_check(cw, ls, tree_spider(cw).euler_chain(cw), h)
    assert rel(shifted, pairing * base) < 1e-10


@given(seeds, st.integers(1, 4))
def test_shift_rule_lens_matrix_rep(seed, k):
    rng = np.random.default_rng(seed)
    cw = lens_space(5, 2)
    ls = random_lens_rep(rng, 5, 2)
    e = tree_spider(cw).euler_chain(cw)
    shifted, base, pairing = euler_transform_check(cw, ls, e, {"t": k})
    assert rel(shifted, pairing * base) < 1e-9


@given(seeds)
def test_reroute_changes_by_pairing(seed):
    rng = np.random.default_rng(seed)
    cw = three_torus()
    ls = random_torus_rep(rng, 2)
    spider = tree_spider(cw)
    cell = str(rng.choice(["v", "x", "y", "z", "xy", "xz", "yz", "xyz"]))
    loop = [(str(e), int(rng.choice([-1, 1]))) for e in rng.choice(["x", "y", "z"], size=3)]
    moved = reroute(cw, spider, cell, loop)
    h = moved.euler_chain(cw).vector(cw) - spider.euler_chain(cw).vector(cw)
    lhs = turaev_torsion(cw, ls, spider=moved)
    rhs = pair_det_rep(cw, ls, h) * turaev_torsion(cw, ls, spider=spider)
    assert rel(lhs, rhs) < 1e-10


def test_spider_realizes_euler_chain():
    cw = subdivided_circle(3)
    e = tree_spider(cw).euler_chain(cw).shifted(cw, {"e0": 2, "e1": 2, "e2": 2})
    spider = spider_for_euler_chain(cw, e)
    assert np.array_equal(spider.euler_chain(cw).vector(cw), e.vector(cw))


def test_bad_euler_chain():
    cw = subdivided_circle(3)
    e = tree_spider(cw).euler_chain(cw)
    broken = EulerChain({**e.chain, "e0": e.chain.get("e0", 0) + 1}, e.divisor)
    with pytest.raises(BadEulerChain):
        broken.check(cw)


def test_euler_divisor_is_spider_boundary():
    for cw in (subdivided_circle(4), lens_space(5, 1), three_torus()):
        e = tree_spider(cw).euler_chain(cw)
        assert cw.boundary_of_chain(e.vector(cw)) == cw.euler_divisor()


# ---------------------------------------------------------------- Chern-Simons chains

def test_cs_cancellation():
    cw = subdivided_circle(3)
    e0 = tree_spider(cw).euler_chain(cw)
    e1 = e0.shifted(cw, {"e0": 1, "e1": 1, "e2": 1})
    a = cs_between(cw, e0, e1)
    b = cs_between(cw, e1, e0)
    loop = cs_compose(cw, a, b)
    assert cw.boundary_of_chain(EulerChain(loop.chain, {}).vector(cw)) == {}
    assert not any(loop.chain.values())


def test_cs_endpoint_mismatch():
    cw = subdivided_circle(3)
    a = CSChain({"e0": 1}, {"v0": 1}, {"v1": 1}).validate(cw)
    b = CSChain({"e2": 1}, {"v2": 1}, {"v0": 1}).validate(cw)
    with pytest.raises(EndpointMismatch):
        cs_compose(cw, a, b)
    with pytest.raises(EndpointMismatch):
        CSChain({"e0": 1}, {"v0": 1}, {"v2": 1}).validate(cw)


def test_two_spiders_differ_by_a_class():
    cw = lens_space(5, 1)
    s0 = tree_spider(cw)
    s1 = reroute(cw, s0, "D", [("t", 1)] * 3)
    cs = cs_between(cw, s0.euler_chain(cw), s1.euler_chain(cw))
    z = EulerChain(cs.chain, {}).vector(cw)
    assert cw.boundary_of_chain(z) == {}
    # the rerouted 2-cell contributes (+1)^2 * 3 t, i.e. 3 in Z/5
    assert h1_class(cw, z) == (3,)
