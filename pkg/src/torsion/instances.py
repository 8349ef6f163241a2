"""Seeded random instance generators used by the tests and ``verify-all``."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import sympy as sp

from .complex_core import (
    ChiralityOperator,
    CochainComplex,
    ProjectorFamily,
    validate_complex,
)

__all__ = [
    "complex_normal",
    "random_acyclic_complex",
    "random_chirality",
    "random_complements",
    "random_det_line",
    "scaling_family",
    "conjugation_family",
    "rotated_chirality_family",
    "random_projector_family",
    "random_exact_complex",
]


def complex_normal(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_acyclic_complex(rng: np.random.Generator, n: int, max_rank: int = 3,
                           symmetric: bool = True, max_dim: int = 6) -> CochainComplex:
    """Random acyclic complex of length ``n``.

    Ranks ``r_k`` of the differentials are drawn first, so ``d_k = r_{k-1} + r_k``;
    each differential is a random change of basis of the standard
    ``A^k -> B^{k+1}`` identification.  With ``symmetric=True`` the dimensions
    satisfy ``d_k = d_{n-k}`` (required for chiralities).
    """
    while True:
        ranks = rng.integers(0, max_rank + 1, size=n)
        dims = [(ranks[k - 1] if k > 0 else 0) + (ranks[k] if k < n else 0) for k in range(n + 1)]
        if sum(dims) == 0 or max(dims) > max_dim:
            continue
        if symmetric and any(dims[k] != dims[n - k] for k in range(n + 1)):
            continue
        break
    frames = [complex_normal(rng, d, d) for d in dims]
    mats = []
    for k in range(n):
        E = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        shift = ranks[k - 1] if k > 0 else 0
        for i in range(ranks[k]):
            E[i, shift + i] = 1.0
        inv = np.linalg.inv(frames[k]) if dims[k] else np.zeros((0, 0))
        mats.append(frames[k + 1] @ E @ inv)
    return validate_complex(mats, dims=dims, tol=1e-10)


def random_chirality(rng: np.random.Generator, C: CochainComplex) -> ChiralityOperator:
    n = C.n
    r = (n - 1) // 2
    lower = [complex_normal(rng, C.dims[k], C.dims[k]) for k in range(r + 1)]
    return ChiralityOperator.from_lower(lower, n)


def random_complements(rng: np.random.Generator, C: CochainComplex) -> list[np.ndarray]:
    """Random (generically non-coordinate) complements of ``ker d_k`` with random bases."""
    out = []
    for k in range(C.n + 1):
        D = C.d(k)
        rk = np.linalg.matrix_rank(D) if D.size else 0
        if rk == 0:
            out.append(np.zeros((C.dims[k], 0), dtype=complex))
            continue
        out.append(complex_normal(rng, C.dims[k], rk))
    return out


def random_det_line(rng: np.random.Generator, dims):
    from .complex_core import DetLineElement

    return DetLineElement(tuple(complex_normal(rng, d, d) for d in dims))


def scaling_family(C: CochainComplex, coeffs):
    """Family ``d_k(z) = (1 + z c_k) d_k`` with its derivative ``a_k = c_k d_k``."""
    coeffs = list(coeffs)

    def at(z: complex) -> CochainComplex:
        mats = [(1 + z * coeffs[k]) * C.d(k) for k in range(C.n)]
        return validate_complex(mats, dims=C.dims, tol=1e-9)

    a = [coeffs[k] * C.d(k) for k in range(C.n)]
    return at, a


def conjugation_family(rng: np.random.Generator, C: CochainComplex):
    """Family ``d(z) = exp(zX) d exp(-zX)`` with ``a = X d - d X`` for a random degree-0 ``X``."""
    blocks = [rng.normal(size=(d, d)) for d in C.dims]
    X = sla.block_diag(*blocks) if C.total_dim else np.zeros((0, 0))
    D = C.full_differential()
    off = C.offsets
    A = X @ D - D @ X

    def at(z: complex) -> CochainComplex:
        g = sla.expm(z * X)
        Dz = g @ D @ np.linalg.inv(g)
        mats = [Dz[off[k + 1]:off[k + 2], off[k]:off[k + 1]] for k in range(C.n)]
        return validate_complex(mats, dims=C.dims, tol=1e-9)

    a = [A[off[k + 1]:off[k + 2], off[k]:off[k + 1]] for k in range(C.n)]
    return at, a


def rotated_chirality_family(rng: np.random.Generator, C: CochainComplex, G: ChiralityOperator):
    """``G_t = R_t G R_t^{-1}`` with ``R_t = exp(tX)`` for a degree-0 ``X``.

    Returns the family and the exact derivative blocks at ``t = 0``.
    """
    n = C.n
    Xs = [0.5 * rng.normal(size=(d, d)) for d in C.dims]

    def at(t: float) -> ChiralityOperator:
        R = [sla.expm(t * X) for X in Xs]
        Rinv = [sla.expm(-t * X) for X in Xs]
        return ChiralityOperator(tuple(R[n - k] @ G.blocks[k] @ Rinv[k] for k in range(n + 1)))

    deriv = [Xs[n - k] @ G.blocks[k] - G.blocks[k] @ Xs[k] for k in range(n + 1)]
    return at, deriv


def random_projector_family(rng: np.random.Generator, dim: int, rank: int, t0: float = 0.0,
                            h: float = 1e-4, points: int = 5):
    """Commuting projector/operator pairs on a grid around ``t0``.

    ``Pi_t = R_t Pi R_t^{-1}`` and ``A_t = R_t (M_t Pi + N_t (1 - Pi)) R_t^{-1}``
    where ``M_t, N_t`` are polynomials in fixed matrices commuting with ``Pi``.
    """
    S = complex_normal(rng, dim, dim) + dim * np.eye(dim)
    Sinv = np.linalg.inv(S)
    Pi0 = S @ np.diag([1.0] * rank + [0.0] * (dim - rank)) @ Sinv
    X = 0.7 * rng.normal(size=(dim, dim))
    Min = S @ sla.block_diag(complex_normal(rng, rank, rank), np.zeros((dim - rank, dim - rank))) @ Sinv
    Mout = S @ sla.block_diag(np.zeros((rank, rank)), complex_normal(rng, dim - rank, dim - rank)) @ Sinv
    c = rng.normal(size=4)
    half = points // 2
    ts = t0 + h * np.arange(-half, half + 1)
    projectors, operators = [], []
    for t in ts:
        R = sla.expm(t * X)
        Rinv = sla.expm(-t * X)
        inner = (1 + c[0] * t + c[1] * t * t) * Min + np.sin(c[2] * t) * Min @ Min + (1 + c[3] * t) * Mout
        projectors.append(R @ Pi0 @ Rinv)
        operators.append(R @ inner @ Rinv)
    family = ProjectorFamily.from_grid(ts, projectors, operators, tol=1e-9)

    def trace_curve(t: float) -> complex:
        inner = (1 + c[0] * t + c[1] * t * t) * Min + np.sin(c[2] * t) * Min @ Min
        return np.trace(inner)

    return family, trace_curve


def _integer_frame(rng: np.random.Generator, d: int) -> sp.Matrix:
    while True:
        F = sp.Matrix(rng.integers(-2, 3, size=(d, d)).tolist()) + sp.eye(d) if d else sp.zeros(0, 0)
        if d == 0 or F.det() != 0:
            return F


def random_exact_complex(rng: np.random.Generator, n: int, max_rank: int = 2, max_dim: int = 4):
    """Random acyclic complex over the Gaussian rationals with an exact chirality.

    Returns ``(ExactComplex, chirality_blocks)``; chirality blocks are
    integer matrices in degrees ``<= r`` and their exact inverses above.
    """
    from . import exact as ex
    from .complex_core import validate_exact_complex

    while True:
        ranks = rng.integers(0, max_rank + 1, size=n)
        dims = [int((ranks[k - 1] if k > 0 else 0) + (ranks[k] if k < n else 0)) for k in range(n + 1)]
        if 0 < sum(dims) and max(dims) <= max_dim and all(dims[k] == dims[n - k] for k in range(n + 1)):
            break
    frames = [_integer_frame(rng, d) for d in dims]
    mats = []
    for k in range(n):
        E = sp.zeros(dims[k + 1], dims[k])
        shift = int(ranks[k - 1]) if k > 0 else 0
        for i in range(int(ranks[k])):
            E[i, shift + i] = 1
        M = frames[k + 1] * E * frames[k].inv() if dims[k] and dims[k + 1] else E
        mats.append(ex.matrix(M.tolist(), ex.QQ_I, M.shape))
    C = validate_exact_complex(mats, ex.QQ_I, dims)
    r = (n - 1) // 2
    blocks = [None] * (n + 1)
    for j in range(r + 1):
        G = _integer_frame(rng, dims[j])
        blocks[j] = ex.matrix(G.tolist(), ex.QQ_I, G.shape)
        Gi = G.inv() if dims[j] else G
        blocks[n - j] = ex.matrix(Gi.tolist(), ex.QQ_I, Gi.shape)
    return C, blocks
