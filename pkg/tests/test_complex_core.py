import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsion import exact as ex
from torsion.complex_core import (
    ChiralityOperator,
    ProjectorFamily,
    chirality_torsion,
    contraction_from_complements,
    contraction_from_complex,
    direct_sum,
    direct_sum_chirality,
    direct_sum_sign,
    graded_det,
    graded_trace,
    projector_trace_derivative,
    refined_torsion_element,
    signature_sign_correction,
    signature_torsion,
    super_det,
    super_trace,
    supercommutator,
    torsion_derivative_wrt_chirality,
    torsion_derivative_wrt_differential,
    validate_chirality,
    validate_complex,
    validate_exact_complex,
)
from torsion.errors import (
    EvenLength,
    InvalidChirality,
    NonCommuting,
    NotAComplex,
    NotAcyclic,
    NotAPerturbation,
    ShapeMismatch,
    SignatureNotInvertible,
    SingularBlock,
)
from torsion.instances import (
    random_acyclic_complex,
    random_chirality,
    random_complements,
    random_det_line,
    random_exact_complex,
    rotated_chirality_family,
    scaling_family,
)

seeds = st.integers(0, 2**32 - 1)
lengths = st.sampled_from([1, 3, 5])


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def two_term(a):
    return validate_complex([[[a]]])


SWAP = ChiralityOperator.from_lower([[[1.0]]], 1)


# ---------------------------------------------------------------- validation

def test_two_term_is_acyclic():
    C = two_term(2.0)
    assert C.dims == (1, 1)
    assert C.is_acyclic


def test_zero_map_has_homology():
    C = validate_complex([np.zeros((1, 1))])
    assert C.betti == (1, 1)
    assert not C.is_acyclic
    with pytest.raises(NotAcyclic):
        refined_torsion_element(C)


def test_d_squared_nonzero_rejected():
    with pytest.raises(NotAComplex):
        validate_complex([[[1.0]], [[1.0]]])


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        validate_complex([np.ones((2, 1)), np.ones((1, 3))])


# ---------------------------------------------------------------- refined torsion

def test_two_term_values():
    assert refined_torsion_element(two_term(2.0)) == pytest.approx(2.0)
    assert refined_torsion_element(two_term(1.0)) == pytest.approx(1.0)


def test_chirality_two_term_sign():
    # literal evaluation: prefactor (-1)^m with m = 1 on dims (1, 1)
    assert chirality_torsion(two_term(2.0), SWAP) == pytest.approx(-2.0)
    assert chirality_torsion(two_term(-3.0 + 1j), SWAP) == pytest.approx(3.0 - 1j)


def test_signature_two_term():
    C = two_term(2.0)
    assert signature_torsion(C, SWAP, reconcile=False) == pytest.approx(2.0)
    assert signature_torsion(C, SWAP) == pytest.approx(chirality_torsion(C, SWAP))


def test_signature_singular():
    # G_1 = id keeps ker d_1 inside ker(d G) on C^1, so B has a kernel
    C = validate_complex([[[1.0], [0.0]], [[0.0, 1.0], [0.0, 0.0]], [[0.0, 1.0]]])
    G = ChiralityOperator.from_lower([np.eye(1), np.eye(2)], 3)
    with pytest.raises(SignatureNotInvertible):
        signature_torsion(C, G)


def test_even_length_rejected():
    C = validate_complex([np.eye(1), np.zeros((1, 1))])
    with pytest.raises(EvenLength):
        chirality_torsion(C, [np.eye(1)] * 3)


def test_bad_chirality_rejected():
    C = two_term(2.0)
    with pytest.raises(InvalidChirality):
        validate_chirality(C, [np.array([[2.0]]), np.array([[2.0]])])


@given(seeds, lengths)
def test_complement_independence(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n, max_dim=6)
    c = random_det_line(rng, C.dims)
    ref = refined_torsion_element(C, c)
    assert rel(refined_torsion_element(C, c, random_complements(rng, C)), ref) < 1e-9


@given(seeds, lengths, st.complex_numbers(min_magnitude=0.2, max_magnitude=5))
def test_slot_linearity(seed, n, alpha):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n)
    c = random_det_line(rng, C.dims)
    ref = refined_torsion_element(C, c)
    for k in range(n + 1):
        if C.dims[k]:
            assert rel(refined_torsion_element(C, c.scaled(k, alpha)), ref * alpha ** ((-1) ** k)) < 1e-9


@given(seeds, lengths)
def test_multiplicativity_float(seed, n):
    rng = np.random.default_rng(seed)
    C1, C2 = random_acyclic_complex(rng, n), random_acyclic_complex(rng, n)
    G1, G2 = random_chirality(rng, C1), random_chirality(rng, C2)
    S = direct_sum(C1, C2)
    lhs = chirality_torsion(S, direct_sum_chirality(G1, G2))
    assert rel(lhs, chirality_torsion(C1, G1) * chirality_torsion(C2, G2)) < 1e-10
    plain = refined_torsion_element(S)
    assert rel(plain, direct_sum_sign(C1, C2) * refined_torsion_element(C1) * refined_torsion_element(C2)) < 1e-10


def test_doubling_squares():
    rng = np.random.default_rng(5)
    C = random_acyclic_complex(rng, 3)
    G = random_chirality(rng, C)
    tau = chirality_torsion(C, G)
    assert rel(chirality_torsion(direct_sum(C, C), direct_sum_chirality(G, G)), tau ** 2) < 1e-10


@pytest.mark.parametrize("n", [1, 3, 5])
def test_multiplicativity_exact(n):
    rng = np.random.default_rng(100 + n)
    (A, GA), (B, GB) = random_exact_complex(rng, n), random_exact_complex(rng, n)
    S = validate_exact_complex([ex.block_diag(A.d(k), B.d(k)) for k in range(n)], ex.QQ_I,
                               [a + b for a, b in zip(A.dims, B.dims)])
    GS = [ex.block_diag(a, b) for a, b in zip(GA, GB)]
    assert chirality_torsion(S, GS) == chirality_torsion(A, GA) * chirality_torsion(B, GB)


@pytest.mark.parametrize("n", [1, 3])
def test_exact_matches_float(n):
    rng = np.random.default_rng(7 + n)
    E, G = random_exact_complex(rng, n)
    exact_value = ex.to_complex(E.domain, chirality_torsion(E, G))
    C = E.to_complex()
    blocks = [np.array([[ex.to_complex(E.domain, x) for x in row] for row in g.to_list()], dtype=complex)
              .reshape(g.shape) for g in G]
    assert rel(chirality_torsion(C, blocks), exact_value) < 1e-10


@given(seeds, lengths)
def test_negated_chirality_sign(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n)
    G = random_chirality(rng, C)
    r = (n - 1) // 2
    flipped = ChiralityOperator.from_lower([-G.blocks[j] for j in range(r + 1)], n)
    expected = (-1) ** sum(C.dims[: r + 1])
    assert rel(chirality_torsion(C, flipped), expected * chirality_torsion(C, G)) < 1e-9


@given(seeds, lengths)
def test_signature_equivalence(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n)
    G = random_chirality(rng, C)
    try:
        literal = signature_torsion(C, G, reconcile=False)
    except SignatureNotInvertible:
        return
    ct = chirality_torsion(C, G)
    assert rel(literal * signature_sign_correction(C.dims), ct) < 1e-9


def test_chirality_independent_of_lower_bases():
    rng = np.random.default_rng(11)
    C = random_acyclic_complex(rng, 3)
    G = random_chirality(rng, C)
    lower = [rng.normal(size=(d, d)) + np.eye(d) for d in C.dims[:2]]
    assert rel(chirality_torsion(C, G, lower), chirality_torsion(C, G)) < 1e-9


# ---------------------------------------------------------------- traces and determinants

def test_super_trace_identity():
    dims = (1, 2, 1)
    blocks = [np.eye(d) for d in dims]
    assert super_trace(dims, blocks) == pytest.approx(0)
    brute = sum((-1) ** k * k * d for k, d in enumerate(dims))
    assert graded_trace(dims, blocks) == pytest.approx(brute)


def test_super_det_scalar():
    assert super_det((1, 1), [2 * np.eye(1), 2 * np.eye(1)]) == pytest.approx(1.0)


def test_distinct_blocks_brute_force(rng):
    dims = (2, 3, 1)
    blocks = [rng.normal(size=(d, d)) + 3 * np.eye(d) for d in dims]
    dets = [np.linalg.det(b) for b in blocks]
    assert super_det(dims, blocks) == pytest.approx(dets[0] / dets[1] * dets[2])
    assert graded_det(dims, blocks) == pytest.approx(dets[1] ** -1 * dets[2] ** 2)
    assert super_trace(dims, blocks) == pytest.approx(np.trace(blocks[0]) - np.trace(blocks[1]) + np.trace(blocks[2]))


def test_singular_block():
    with pytest.raises(SingularBlock):
        super_det((2,), [np.array([[1.0, 1.0], [1.0, 1.0]])])


@given(seeds, st.integers(1, 2))
def test_supercommutator_has_zero_supertrace(seed, s):
    rng = np.random.default_rng(seed)
    dims = [int(d) for d in rng.integers(1, 4, size=5)]
    off = np.concatenate([[0], np.cumsum(dims)])
    N = off[-1]
    S, T = np.zeros((N, N), complex), np.zeros((N, N), complex)
    for k in range(5):
        if k + s < 5:
            S[off[k + s]:off[k + s + 1], off[k]:off[k + 1]] = rng.normal(size=(dims[k + s], dims[k]))
            T[off[k]:off[k + 1], off[k + s]:off[k + s + 1]] = rng.normal(size=(dims[k], dims[k + s]))
    Z = supercommutator(S, s, T, -s, dims)
    blocks = [Z[off[k]:off[k + 1], off[k]:off[k + 1]] for k in range(5)]
    assert abs(super_trace(dims, blocks)) < 1e-10


# ---------------------------------------------------------------- contractions and variations

def test_two_term_contraction():
    k = contraction_from_complex(two_term(4.0))
    assert k.blocks[1] == pytest.approx(np.array([[0.25]]))


@given(seeds, lengths)
def test_contraction_identity(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n)
    assert contraction_from_complex(C).residual(C) < 1e-10
    assert contraction_from_complements(C, random_complements(rng, C)).residual(C) < 1e-10


def test_contraction_needs_acyclic():
    with pytest.raises(NotAcyclic):
        contraction_from_complex(validate_complex([np.zeros((1, 1))]))


def test_zero_perturbation():
    rng = np.random.default_rng(2)
    C = random_acyclic_complex(rng, 3)
    a = [np.zeros_like(C.d(k)) for k in range(3)]
    assert torsion_derivative_wrt_differential(C, a) == 0


def test_non_perturbation_rejected():
    rng = np.random.default_rng(3)
    C = random_acyclic_complex(rng, 3, max_rank=2)
    a = [rng.normal(size=C.d(k).shape) for k in range(3)]
    with pytest.raises(NotAPerturbation):
        torsion_derivative_wrt_differential(C, a)


@given(seeds, lengths)
def test_variation_matches_finite_differences(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n, max_dim=5)
    G = random_chirality(rng, C)
    at, a = scaling_family(C, rng.uniform(1, 2, size=n))
    d1 = torsion_derivative_wrt_differential(C, a)
    d2 = torsion_derivative_wrt_differential(C, a, contraction_from_complements(C, random_complements(rng, C)))
    assert abs(d1 - d2) < 1e-10 * max(1, abs(d1))
    errs = []
    for h in (1e-3, 1e-4):
        fd = np.log(chirality_torsion(at(h), G) / chirality_torsion(at(-h), G)) / (2 * h)
        errs.append(abs(fd - d1))
    assert errs[1] < 1e-5 * max(1, abs(d1))
    if errs[0] > 1e-11:
        # O(h^2): one decade in h buys about two decades in error
        assert errs[1] < 0.05 * errs[0]


def test_uniform_scaling_derivative():
    rng = np.random.default_rng(4)
    C = random_acyclic_complex(rng, 3)
    a = [C.d(k) for k in range(3)]
    k = contraction_from_complex(C)
    blocks = [a[j - 1] @ k.blocks[j] if j else np.zeros((C.dims[0], C.dims[0])) for j in range(4)]
    # -str(a k): (a k) on C^j is a_{j-1} k_j
    assert torsion_derivative_wrt_differential(C, a) == pytest.approx(-super_trace(C, blocks))


def test_chirality_derivative_constant_family():
    rng = np.random.default_rng(8)
    C = random_acyclic_complex(rng, 3)
    G = random_chirality(rng, C)
    assert abs(torsion_derivative_wrt_chirality(C, lambda t: G)) < 1e-12


def test_chirality_derivative_scaling_family():
    C = two_term(2.0)
    fam = lambda t: ChiralityOperator.from_lower([[[np.exp(t)]]], 1)
    val = torsion_derivative_wrt_chirality(C, fam, 0.3)
    assert val == pytest.approx(-1.0, abs=1e-8)
    h = 1e-5
    fd = np.log(chirality_torsion(C, fam(0.3 + h)) / chirality_torsion(C, fam(0.3 - h))) / (2 * h)
    assert fd == pytest.approx(val, abs=1e-8)


@given(seeds, st.sampled_from([1, 3]))
def test_chirality_derivative_rotations(seed, n):
    rng = np.random.default_rng(seed)
    C = random_acyclic_complex(rng, n)
    G = random_chirality(rng, C)
    fam, deriv = rotated_chirality_family(rng, C, G)
    val = torsion_derivative_wrt_chirality(C, fam, 0.0)
    assert abs(torsion_derivative_wrt_chirality(C, fam, 0.0, derivative=deriv) - val) < 1e-6 * max(1, abs(val))
    h = 1e-4
    fd = np.log(chirality_torsion(C, fam(h)) / chirality_torsion(C, fam(-h))) / (2 * h)
    assert abs(fd - val) < 1e-5 * max(1, abs(val))


# ---------------------------------------------------------------- projector families

def test_constant_projector_linear_operator():
    Pi = np.diag([1.0, 1.0, 0.0])
    ts = np.array([-1e-3, 0.0, 1e-3])
    P = ProjectorFamily.from_grid(ts, [Pi] * 3, [t * Pi for t in ts])
    assert projector_trace_derivative(P, 0.0) == pytest.approx(2.0)


def test_noncommuting_family_rejected():
    Pi = np.diag([1.0, 0.0])
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(NonCommuting):
        ProjectorFamily.from_grid(np.array([0.0, 1.0, 2.0]), [Pi] * 3, [A] * 3)
