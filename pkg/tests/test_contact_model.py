from math import comb

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from torsion.complex_core import graded_det
from torsion.contact_model import (
    ResonanceModel,
    assemble_nabla,
    contact_chirality,
    contact_signature_operator,
    j_projector,
    lie_blocks,
    plus_dims,
    psi_trivial_model,
    random_resonance_model,
    signature_condition,
    torsion_sign_exponent_q,
    verify_computetorsion,
)
from torsion.errors import ConstraintViolation, DegenerateEigenvalue
from torsion.exterior import ContactExterior, chirality_theta

seeds = st.integers(0, 2**32 - 1)
eigenvalues = st.complex_numbers(max_magnitude=3).filter(
    lambda z: min(abs(z), abs(z - 1), abs(z + 1)) > 0.05)


def order_formula(dims, q):
    return (-1) ** (q + 1) * sum((-1) ** k * k * d for k, d in enumerate(dims))


# ---------------------------------------------------------------- exterior algebra

@pytest.mark.parametrize("r", [1, 2, 3])
def test_chirality_is_exact_involution(r):
    ce = ContactExterior(r)
    B = ce.chirality_exact
    dims = ce.dims()
    for k in range(ce.n + 1):
        assert B[k].shape == (dims[ce.n - k], dims[k])
        P = B[ce.n - k] * B[k]
        assert P == sp.eye(dims[k])


@pytest.mark.parametrize("r", [1, 2, 3])
def test_lefschetz_isomorphisms(r):
    ce = ContactExterior(r)
    h = ce.horizontal_dims()
    assert h == [comb(2 * r, k) for k in range(2 * r + 1)]
    for k in range(r + 1):
        L = ce.lefschetz_power(k, r - k)
        assert L.shape == (h[2 * r - k], h[k])
        assert L.rank() == h[k]


def test_volume_coefficient():
    assert [ContactExterior(r).volume_coefficient() for r in (1, 2, 3)] == [1, 2, 6]


def test_float_chirality_matches_exact():
    ce = ContactExterior(2)
    G = chirality_theta(ce)
    for k, B in enumerate(ce.chirality_exact):
        assert np.allclose(G.blocks[k], np.array(B.tolist(), dtype=float).reshape(B.shape))


# ---------------------------------------------------------------- models

def test_psi_trivial_differential():
    s0 = 2.0
    m = psi_trivial_model(1, 1, s0)
    C = assemble_nabla(m)
    # only g in degree r = 1 and g ^ theta in degree 2: d = (-1)^1 lam = s0
    assert C.dims == (0, 1, 1, 0)
    assert C.d(1) == pytest.approx(np.array([[-(-s0)]]))


def test_default_model_constraints_exact():
    m = random_resonance_model(1, 1, 2.0, 0, 0)
    assert max(m.constraint_residuals().values()) < 1e-12
    C = assemble_nabla(m)
    for k in range(C.n - 1):
        assert np.abs(C.d(k + 1) @ C.d(k)).max() < 1e-12


def test_jordan_model_constraints():
    m = random_resonance_model(1, 3, 1 + 1j, 2, 1)
    assert max(m.constraint_residuals().values()) < 1e-12


@pytest.mark.parametrize("s0", [0.0, 1.0, -1.0])
def test_degenerate_eigenvalues_rejected(s0):
    with pytest.raises(DegenerateEigenvalue):
        random_resonance_model(1, 1, s0, 0, 0)


def test_broken_psi_rejected():
    m = random_resonance_model(1, 1, 2.0, 0, 0)
    psi = list(m.psi)
    psi[0] = psi[0] + 1.0
    with pytest.raises(ConstraintViolation):
        ResonanceModel(m.r, m.s0, m.dims0, m.lam, tuple(psi), m.lef).validate()


@given(seeds, st.integers(1, 3), eigenvalues, st.integers(0, 1))
def test_chirality_commutes_with_lie(seed, r, s0, depth):
    m = random_resonance_model(r, 1, s0, depth, seed)
    G = contact_chirality(m)
    L = lie_blocks(m)
    n = m.n
    for k in range(n + 1):
        assert np.abs(G.blocks[k] @ L[k] - L[n - k] @ G.blocks[k]).max() < 1e-10


def test_signature_invertible_at_two():
    for r in (1, 2, 3):
        m = random_resonance_model(r, 1, 2.0, 0, r)
        assert abs(np.linalg.det(contact_signature_operator(m))) > 1e-8


@given(seeds, st.integers(1, 3), eigenvalues, st.integers(0, 1))
def test_signature_invertible(seed, r, s0, depth):
    assert signature_condition(random_resonance_model(r, 1, s0, depth, seed)) > 1e-10


@pytest.mark.parametrize("r", [1, 2])
def test_signature_boundary(r):
    # the generated family degenerates at s0 = -1, stays regular at s0 = +1
    bad = random_resonance_model(r, 1, -1.0, 0, 0, allow_degenerate=True)
    good = random_resonance_model(r, 1, 1.0, 0, 0, allow_degenerate=True)
    assert signature_condition(bad) < 1e-14
    assert signature_condition(good) > 1e-3


@given(seeds, st.integers(1, 3), eigenvalues)
def test_j_projector(seed, r, s0):
    m = random_resonance_model(r, 1, s0, 0, seed)
    C = assemble_nabla(m)
    G = contact_chirality(m)
    n = m.n
    for k in range(r + 1):
        J = j_projector(m, k)
        assert np.abs(J @ J - J).max() < 1e-10
        if k >= 1:
            dG = C.d(n - k) @ G.blocks[k]
            assert np.abs(dG @ J).max() < 1e-10 * max(1, np.abs(dG).max())


@given(seeds, st.integers(1, 3), eigenvalues)
def test_plus_dims_match_lower_coefficients(seed, r, s0):
    m = random_resonance_model(r, 1, s0, 0, seed)
    pd = plus_dims(m)
    for k in range(r + 1):
        assert pd[k] == m.d0(k)


# ---------------------------------------------------------------- torsion identity

def test_psi_trivial_identity():
    rep = verify_computetorsion(psi_trivial_model(1, 1, 2.0), 0)
    assert rep.rel_error < 1e-9
    assert rep.detlie_max_error < 1e-8


@given(seeds, st.integers(1, 3), eigenvalues, st.integers(0, 1))
def test_torsion_identity(seed, r, s0, depth):
    m = random_resonance_model(r, 1, s0, depth, seed)
    rep = verify_computetorsion(m, seed)
    assert rep.rel_error < 1e-9
    assert rep.detlie_max_error < 1e-8
    assert rep.q == r
    assert rep.order == order_formula(assemble_nabla(m).dims, r)


@pytest.mark.parametrize("profile", [(1, 2), (0, 1), (1, 1), (2, 3)])
def test_profiles(profile):
    m = random_resonance_model(1, 1, 0.5 + 0.5j, 1, 3, profile=profile)
    rep = verify_computetorsion(m, 3)
    assert rep.rel_error < 1e-9
    assert rep.order == order_formula(m.dims, 1)


def test_jordan_block_graded_det():
    s0 = 1.5 - 0.5j
    m = random_resonance_model(1, 3, s0, 2, 4)
    C = assemble_nabla(m)
    exponent = sum((-1) ** k * k * d for k, d in enumerate(C.dims))
    assert graded_det(C, lie_blocks(m)) == pytest.approx((-s0) ** exponent, rel=1e-10)


def test_sign_exponent():
    # Q = sum_{k <= r} (-1)^k (r + 1 - k) dim C^k
    assert torsion_sign_exponent_q([1, 3, 3, 1], 1) == 2 * 1 - 1 * 3
    assert torsion_sign_exponent_q([2, 5, 7, 7, 5, 2], 2) == 3 * 2 - 2 * 5 + 1 * 7
