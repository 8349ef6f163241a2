"""Finite cochain complexes over C and their torsions.

Conventions
-----------
A complex of length ``n`` has spaces ``C^0 .. C^n`` with dimensions ``d_k``
and differentials ``d[k] : C^k -> C^{k+1}`` stored as ``(d_{k+1}, d_k)``
arrays for ``k = 0 .. n-1``.  Degree-preserving operators are lists of square
blocks, one per degree.  A chirality operator is a list of blocks
``G[k] : C^k -> C^{n-k}``.

The refined torsion of an acyclic complex with respect to bases ``c_k`` uses
the splitting ``C^k = d(A^{k-1}) + A^k`` where ``A^k`` is a complement of the
kernel of ``d[k]``.  The determinant of ``c_k`` relative to the basis
``[d a_{k-1} | a_k]`` is ``lam_k`` and the torsion is

    (-1)^N * prod_k lam_k^{(-1)^k},   N = 1/2 sum_k a_k (a_k + (-1)^{k+1}),

with ``a_k = dim A^k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import exact as ex
from .errors import (
    EvenLength,
    InvalidChirality,
    NonCommuting,
    NotAcyclic,
    NotAComplex,
    NotAPerturbation,
    ShapeMismatch,
    SignatureNotInvertible,
    SingularBlock,
)

RANK_RTOL = 1e-10
IDENTITY_TOL = 1e-10

__all__ = [
    "CochainComplex",
    "ExactComplex",
    "DetLineElement",
    "ChiralityOperator",
    "CochainContraction",
    "ProjectorFamily",
    "numerical_rank",
    "validate_complex",
    "validate_exact_complex",
    "refined_torsion_element",
    "torsion_sign_exponent",
    "chirality_sign_exponent",
    "chirality_torsion",
    "signature_torsion",
    "signature_sign_correction",
    "signature_operator",
    "super_trace",
    "graded_trace",
    "super_det",
    "graded_det",
    "supercommutator",
    "contraction_from_complex",
    "contraction_from_complements",
    "torsion_derivative_wrt_differential",
    "torsion_derivative_wrt_chirality",
    "projector_trace_derivative",
    "projector_logdet_derivative",
    "restricted_trace",
    "restricted_logdet",
    "direct_sum",
    "direct_sum_chirality",
    "direct_sum_sign",
]


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL, scale: float | None = None) -> int:
    """Rank from singular values above ``rtol * max(sigma_max, scale)``.

    ``scale`` lets a matrix made entirely of rounding noise (for instance one
    differential of a larger complex) be recognised as zero.
    """
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = max(s[0], scale or 0.0)
    if ref == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * ref))


def _spectral_scale(mats) -> float:
    return max([float(np.linalg.norm(M, 2)) for M in mats if M.size] + [0.0])


def _as_matrix(x, shape=None) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if shape is not None and a.size == 0:
        a = np.zeros(shape, dtype=complex)
    return a


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CochainComplex:
    """Validated finite cochain complex ``0 -> C^0 -> ... -> C^n -> 0``."""

    dims: tuple[int, ...]
    differentials: tuple[np.ndarray, ...]
    betti: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.dims) - 1

    @property
    def is_acyclic(self) -> bool:
        return all(b == 0 for b in self.betti)

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * d for k, d in enumerate(self.dims))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    @property
    def total_dim(self) -> int:
        return int(sum(self.dims))

    def d(self, k: int) -> np.ndarray:
        """Differential ``C^k -> C^{k+1}``; zero maps outside ``0..n-1``."""
        if 0 <= k < self.n:
            return self.differentials[k]
        rows = self.dims[k + 1] if 0 <= k + 1 <= self.n else 0
        cols = self.dims[k] if 0 <= k <= self.n else 0
        return np.zeros((rows, cols), dtype=complex)

    def full_differential(self) -> np.ndarray:
        off = self.offsets
        D = np.zeros((off[-1], off[-1]), dtype=complex)
        for k in range(self.n):
            D[off[k + 1]:off[k + 2], off[k]:off[k + 1]] = self.differentials[k]
        return D

    @property
    def scale(self) -> float:
        """Largest operator norm among the differentials."""
        return _spectral_scale(self.differentials)

    def rank(self, k: int) -> int:
        return numerical_rank(self.d(k), scale=self.scale)

    def check_acyclic(self) -> None:
        if not self.is_acyclic:
            raise NotAcyclic(f"cohomology dimensions {list(self.betti)}")


@dataclass(frozen=True)
class ExactComplex:
    """Cochain complex with differentials over an exact sympy domain."""

    dims: tuple[int, ...]
    differentials: tuple  # DomainMatrix
    domain: object
    betti: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.dims) - 1

    @property
    def is_acyclic(self) -> bool:
        return all(b == 0 for b in self.betti)

    def d(self, k: int):
        if 0 <= k < self.n:
            return self.differentials[k]
        rows = self.dims[k + 1] if 0 <= k + 1 <= self.n else 0
        cols = self.dims[k] if 0 <= k <= self.n else 0
        return ex.zeros(rows, cols, self.domain)

    def to_complex(self) -> CochainComplex:
        K = self.domain
        mats = []
        for D in self.differentials:
            m, n = D.shape
            A = np.zeros((m, n), dtype=complex)
            rows = D.to_list() if m and n else []
            for i, row in enumerate(rows):
                for j, x in enumerate(row):
                    A[i, j] = ex.to_complex(K, x)
            mats.append(A)
        return validate_complex(mats, dims=self.dims)


@dataclass(frozen=True)
class DetLineElement:
    """Ordered bases ``c_k`` of every ``C^k`` (columns of ``bases[k]``)."""

    bases: tuple[np.ndarray, ...]

    @classmethod
    def standard(cls, dims: Sequence[int]) -> "DetLineElement":
        return cls(tuple(np.eye(d, dtype=complex) for d in dims))

    @classmethod
    def from_bases(cls, bases, dims: Sequence[int] | None = None) -> "DetLineElement":
        mats = []
        for k, b in enumerate(bases):
            dk = dims[k] if dims is not None else None
            B = _as_matrix(b, (dk, dk) if dk is not None else None)
            if B.shape[0] != B.shape[1] or (dk is not None and B.shape[0] != dk):
                raise ShapeMismatch(f"basis in degree {k} has shape {B.shape}")
            if B.shape[0] and numerical_rank(B) < B.shape[0]:
                raise ShapeMismatch(f"basis in degree {k} is not linearly independent")
            mats.append(B)
        return cls(tuple(mats))

    def scaled(self, k: int, alpha: complex) -> "DetLineElement":
        """Scale the first vector of the degree-``k`` basis by ``alpha``."""
        bases = list(self.bases)
        B = bases[k].copy()
        B[:, 0] *= alpha
        bases[k] = B
        return DetLineElement(tuple(bases))


@dataclass(frozen=True)
class ChiralityOperator:
    """Involution ``G[k] : C^k -> C^{n-k}`` on an odd-length complex."""

    blocks: tuple

    @property
    def n(self) -> int:
        return len(self.blocks) - 1

    @property
    def r(self) -> int:
        return (self.n - 1) // 2

    @classmethod
    def from_lower(cls, lower: Sequence, n: int) -> "ChiralityOperator":
        """Complete the blocks ``G[k], k <= r`` by ``G[n-k] = G[k]^{-1}``."""
        if n % 2 == 0:
            raise EvenLength("chirality needs an odd length complex")
        r = (n - 1) // 2
        if len(lower) != r + 1:
            raise ShapeMismatch(f"expected {r + 1} lower blocks, got {len(lower)}")
        blocks = [None] * (n + 1)
        for k in range(r + 1):
            G = _as_matrix(lower[k])
            if G.shape[0] != G.shape[1]:
                raise InvalidChirality(f"block {k} is not square")
            blocks[k] = G
            blocks[n - k] = np.linalg.inv(G) if G.size else G.copy()
        return cls(tuple(blocks))

    def full(self, dims: Sequence[int]) -> np.ndarray:
        off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        n = self.n
        G = np.zeros((off[-1], off[-1]), dtype=complex)
        for k in range(n + 1):
            G[off[n - k]:off[n - k + 1], off[k]:off[k + 1]] = self.blocks[k]
        return G


def validate_chirality(C: CochainComplex, blocks, tol: float = IDENTITY_TOL) -> ChiralityOperator:
    """Check shapes and ``G^2 = id`` and return a :class:`ChiralityOperator`."""
    n = C.n
    if n % 2 == 0:
        raise EvenLength(f"complex has even length n={n}")
    if len(blocks) != n + 1:
        raise ShapeMismatch(f"expected {n + 1} chirality blocks, got {len(blocks)}")
    dims = C.dims
    for k in range(n + 1):
        if dims[k] != dims[n - k]:
            raise InvalidChirality(f"dim C^{k} != dim C^{n - k}")
    mats = []
    for k, b in enumerate(blocks):
        G = _as_matrix(b, (dims[n - k], dims[k]))
        if G.shape != (dims[n - k], dims[k]):
            raise ShapeMismatch(f"chirality block {k} has shape {G.shape}")
        mats.append(G)
    for k in range(n + 1):
        if dims[k] == 0:
            continue
        P = mats[n - k] @ mats[k]
        res = np.linalg.norm(P - np.eye(dims[k]))
        if res > tol * max(1.0, np.linalg.norm(mats[k]) * np.linalg.norm(mats[n - k])):
            raise InvalidChirality(f"G_{n - k} G_{k} != id (residual {res:.2e})")
    return ChiralityOperator(tuple(mats))


@dataclass(frozen=True)
class CochainContraction:
    """Degree -1 maps ``k[j] : C^j -> C^{j-1}`` with ``dk + kd = id``."""

    blocks: tuple[np.ndarray, ...]

    def residual(self, C: CochainComplex) -> float:
        worst = 0.0
        for j in range(C.n + 1):
            if C.dims[j] == 0:
                continue
            acc = np.zeros((C.dims[j], C.dims[j]), dtype=complex)
            if j > 0:
                acc += C.d(j - 1) @ self.blocks[j]
            if j < C.n:
                acc += self.blocks[j + 1] @ C.d(j)
            worst = max(worst, float(np.abs(acc - np.eye(C.dims[j])).max()))
        return worst


@dataclass(frozen=True)
class ProjectorFamily:
    """Grid ``t_i`` with commuting pairs ``(Pi_i, A_i)``, ``Pi_i`` idempotent."""

    ts: np.ndarray
    projectors: tuple[np.ndarray, ...]
    operators: tuple[np.ndarray, ...]

    @classmethod
    def from_grid(cls, ts, projectors, operators, tol: float = IDENTITY_TOL) -> "ProjectorFamily":
        ts = np.asarray(ts, dtype=float)
        P = tuple(_as_matrix(p) for p in projectors)
        A = tuple(_as_matrix(a) for a in operators)
        if not (len(ts) == len(P) == len(A)):
            raise ShapeMismatch("grid, projectors and operators differ in length")
        if np.any(np.diff(ts) <= 0):
            raise ShapeMismatch("grid must be strictly increasing")
        for i, (p, a) in enumerate(zip(P, A)):
            if p.shape != a.shape or p.shape[0] != p.shape[1]:
                raise ShapeMismatch(f"grid point {i}: shapes {p.shape}, {a.shape}")
            scale = max(1.0, np.linalg.norm(p))
            if np.linalg.norm(p @ p - p) > tol * scale * scale:
                raise ShapeMismatch(f"grid point {i}: not a projector")
            if np.linalg.norm(p @ a - a @ p) > tol * scale * max(1.0, np.linalg.norm(a)):
                raise NonCommuting(f"grid point {i}: projector and operator do not commute")
        return cls(ts, P, A)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def validate_complex(differentials, dims: Sequence[int] | None = None, tol: float = 1e-12) -> CochainComplex:
    """Validate raw differentials and return a :class:`CochainComplex`.

    Parameters
    ----------
    differentials : sequence of array_like
        ``differentials[k]`` maps ``C^k -> C^{k+1}``.
    dims : sequence of int, optional
        Needed when a space is zero-dimensional or there are no differentials.
    tol : float
        Relative tolerance for ``d[k+1] d[k] = 0``.
    """
    mats = [np.array(m, dtype=complex, ndmin=2) if np.size(m) else None for m in differentials]
    n = len(mats)
    if dims is None:
        if n == 0:
            raise ShapeMismatch("dims are required for a complex without differentials")
        dims = [None] * (n + 1)
        for k, M in enumerate(mats):
            if M is None:
                continue
            for idx, val in ((k, M.shape[1]), (k + 1, M.shape[0])):
                if dims[idx] is not None and dims[idx] != val:
                    raise ShapeMismatch(f"inconsistent dimension in degree {idx}")
                dims[idx] = val
        if any(d is None for d in dims):
            raise ShapeMismatch("cannot infer all dimensions; pass dims explicitly")
    dims = tuple(int(d) for d in dims)
    if len(dims) != n + 1 and not (n == 0 and len(dims) >= 1):
        raise ShapeMismatch(f"{len(dims)} dimensions for {n} differentials")
    if n == 0 and len(dims) > 1:
        raise ShapeMismatch("missing differentials")
    out = []
    for k in range(n):
        M = mats[k]
        if M is None:
            M = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        if M.shape != (dims[k + 1], dims[k]):
            raise ShapeMismatch(f"differential {k} has shape {M.shape}, expected {(dims[k + 1], dims[k])}")
        out.append(M)
    for k in range(n - 1):
        P = out[k + 1] @ out[k]
        if P.size == 0:
            continue
        scale = max(1.0, np.linalg.norm(out[k + 1]) * np.linalg.norm(out[k]))
        if np.linalg.norm(P) > tol * scale:
            raise NotAComplex(f"d_{k + 1} d_{k} != 0 (norm {np.linalg.norm(P):.2e})")
    scale = _spectral_scale(out)
    ranks = [numerical_rank(M, scale=scale) for M in out] + [0]
    betti = tuple(dims[k] - ranks[k] - (ranks[k - 1] if k > 0 else 0) for k in range(n + 1))
    return CochainComplex(dims, tuple(out), betti)


def validate_exact_complex(differentials, domain, dims: Sequence[int] | None = None) -> ExactComplex:
    """Exact counterpart of :func:`validate_complex`; ``d^2 = 0`` is checked exactly."""
    mats = [D if hasattr(D, "domain") else ex.matrix(D, domain) for D in differentials]
    n = len(mats)
    if dims is None:
        if n == 0:
            raise ShapeMismatch("dims are required for a complex without differentials")
        dims = [mats[0].shape[1]] + [M.shape[0] for M in mats]
    dims = tuple(int(d) for d in dims)
    for k, M in enumerate(mats):
        if M.shape != (dims[k + 1], dims[k]):
            raise ShapeMismatch(f"differential {k} has shape {M.shape}")
        if M.domain != domain:
            mats[k] = M.convert_to(domain)
    for k in range(n - 1):
        if dims[k] and dims[k + 2] and not ex.is_zero(mats[k + 1] * mats[k]):
            raise NotAComplex(f"d_{k + 1} d_{k} != 0")
    ranks = [ex.rank(M) for M in mats] + [0]
    betti = tuple(dims[k] - ranks[k] - (ranks[k - 1] if k > 0 else 0) for k in range(n + 1))
    return ExactComplex(dims, tuple(mats), domain, betti)


# --------------------------------------------------------------------------
# refined torsion
# --------------------------------------------------------------------------


def torsion_sign_exponent(complement_dims: Sequence[int]) -> int:
    """Integer ``N = 1/2 sum_k a_k (a_k + (-1)^{k+1})``."""
    total = sum(a * (a + (-1) ** (k + 1)) for k, a in enumerate(complement_dims))
    return total // 2


def chirality_sign_exponent(dims: Sequence[int]) -> int:
    """Integer ``m = 1/2 sum_{j <= r} d_j (d_j + (-1)^{r+j})`` for ``n = 2r+1``."""
    n = len(dims) - 1
    r = (n - 1) // 2
    total = sum(dims[j] * (dims[j] + (-1) ** (r + j)) for j in range(r + 1))
    return total // 2


def _pivot_complement(D: np.ndarray, dim: int, scale: float | None = None) -> np.ndarray:
    """Coordinate subspace complementary to ``ker D`` via column-pivoted QR."""
    rk = numerical_rank(D, scale=scale)
    if rk == 0:
        return np.zeros((dim, 0), dtype=complex)
    _, _, piv = sla.qr(D, pivoting=True, mode="economic")
    return np.eye(dim, dtype=complex)[:, np.sort(piv[:rk])]


def _check_complements(C: CochainComplex, complements) -> list[np.ndarray]:
    out = []
    for k in range(C.n + 1):
        A = _as_matrix(complements[k], (C.dims[k], 0))
        if A.shape[0] != C.dims[k]:
            raise ShapeMismatch(f"complement in degree {k} has {A.shape[0]} rows")
        if A.shape[1] != C.rank(k):
            raise ShapeMismatch(f"complement in degree {k} has wrong dimension")
        if A.shape[1] and numerical_rank(C.d(k) @ A) < A.shape[1]:
            raise ShapeMismatch(f"complement in degree {k} meets the kernel")
        out.append(A)
    return out


def refined_torsion_element(C, c: DetLineElement | None = None, complements=None):
    """Refined torsion of an acyclic complex with respect to bases ``c``.

    Parameters
    ----------
    C : CochainComplex or ExactComplex
    c : DetLineElement, optional
        Defaults to the standard bases.  For an :class:`ExactComplex` pass a
        list of DomainMatrix bases instead.
    complements : sequence of arrays, optional
        Columns spanning a complement ``A^k`` of ``ker d[k]`` in each degree.
        The result does not depend on this choice; it is exposed for testing.

    Returns
    -------
    complex, or a domain element for exact input.
    """
    if isinstance(C, ExactComplex):
        return _exact_refined_torsion(C, c)
    C.check_acyclic()
    n = C.n
    if c is None:
        c = DetLineElement.standard(C.dims)
    if len(c.bases) != n + 1:
        raise ShapeMismatch("determinant line element has the wrong number of degrees")
    if complements is None:
        comps = [_pivot_complement(C.d(k), C.dims[k], C.scale) for k in range(n + 1)]
    else:
        comps = _check_complements(C, complements)
    # accumulate in log form to avoid overflow on larger instances
    log_abs = 0.0
    phase = 1.0 + 0j
    for k in range(n + 1):
        if C.dims[k] == 0:
            continue
        image = C.d(k - 1) @ comps[k - 1] if k > 0 else np.zeros((C.dims[k], 0))
        M = np.hstack([image, comps[k]])
        if M.shape[1] != C.dims[k]:
            raise NotAcyclic(f"splitting in degree {k} is incomplete")
        s1, l1 = np.linalg.slogdet(c.bases[k])
        s2, l2 = np.linalg.slogdet(M)
        if s2 == 0:
            raise NotAcyclic(f"degenerate splitting in degree {k}")
        e = (-1) ** k
        log_abs += e * (l1 - l2)
        phase *= (s1 / s2) ** e
    N = torsion_sign_exponent([A.shape[1] for A in comps])
    return (-1) ** N * phase * np.exp(log_abs)


def _exact_refined_torsion(C: ExactComplex, bases=None):
    if not C.is_acyclic:
        raise NotAcyclic(f"cohomology dimensions {list(C.betti)}")
    K = C.domain
    n = C.n
    comps = []
    for k in range(n + 1):
        piv = ex.pivot_columns(C.d(k)) if k < n else []
        E = ex.eye(C.dims[k], K)
        cols = [E.extract(list(range(C.dims[k])), [p]) for p in piv]
        comps.append(ex.hstack(cols, K, C.dims[k]))
    value = K.one
    for k in range(n + 1):
        if C.dims[k] == 0:
            continue
        blocks = []
        if k > 0 and comps[k - 1].shape[1]:
            blocks.append(C.d(k - 1) * comps[k - 1])
        blocks.append(comps[k])
        M = ex.hstack(blocks, K, C.dims[k])
        cb = bases[k] if bases is not None else ex.eye(C.dims[k], K)
        lam = ex.det(cb) / ex.det(M)
        value = value * lam if k % 2 == 0 else value / lam
    N = torsion_sign_exponent([A.shape[1] for A in comps])
    return value if N % 2 == 0 else -value


# --------------------------------------------------------------------------
# chirality torsion and the signature formula
# --------------------------------------------------------------------------


def _chirality_bases(C, G, lower=None):
    n = C.n
    r = (n - 1) // 2
    bases = [None] * (n + 1)
    for j in range(r + 1):
        bases[j] = np.eye(C.dims[j], dtype=complex) if lower is None else _as_matrix(lower[j])
        bases[n - j] = G.blocks[j] @ bases[j]
    return DetLineElement(tuple(bases))


def chirality_torsion(C, G, lower_bases=None):
    """Refined torsion with respect to the element fixed by the chirality ``G``.

    The bases are ``c_j`` (free, ``j <= r``) and ``G c_j`` in degree ``n-j``;
    the prefactor is ``(-1)^m`` with ``m`` from :func:`chirality_sign_exponent`.
    The value does not depend on ``lower_bases``.
    """
    if C.n % 2 == 0:
        raise EvenLength(f"complex has even length n={C.n}")
    if isinstance(C, ExactComplex):
        return _exact_chirality_torsion(C, G)
    if not isinstance(G, ChiralityOperator):
        G = validate_chirality(C, G)
    C.check_acyclic()
    c = _chirality_bases(C, G, lower_bases)
    m = chirality_sign_exponent(C.dims)
    return (-1) ** m * refined_torsion_element(C, c)


def _exact_chirality_torsion(C: ExactComplex, G_blocks):
    n = C.n
    r = (n - 1) // 2
    K = C.domain
    bases = [None] * (n + 1)
    for j in range(r + 1):
        bases[j] = ex.eye(C.dims[j], K)
        Gj = G_blocks[j] if hasattr(G_blocks[j], "domain") else ex.matrix(G_blocks[j], K, (C.dims[n - j], C.dims[j]))
        bases[n - j] = Gj
    val = _exact_refined_torsion(C, bases)
    return -val if chirality_sign_exponent(C.dims) % 2 else val


def signature_operator(C: CochainComplex, G: ChiralityOperator) -> np.ndarray:
    """Full matrix of ``B = G d + d G``."""
    D = C.full_differential()
    Gm = G.full(C.dims)
    return Gm @ D + D @ Gm


def _null_basis(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(M.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(M)
    rk = int(np.count_nonzero(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vh[rk:].conj().T


def signature_sign_correction(dims: Sequence[int]) -> int:
    """Sign relating the product formula to :func:`chirality_torsion`.

    Evaluating both literally gives
    ``chirality_torsion = (-1)^{sum_{j<=r} d_j} * product formula``;
    this is the same sign produced by replacing ``G`` with ``-G`` on the lower
    half of the complex.
    """
    n = len(dims) - 1
    r = (n - 1) // 2
    return (-1) ** sum(dims[: r + 1])


def signature_torsion(C: CochainComplex, G, reconcile: bool = True, rtol: float = RANK_RTOL) -> complex:
    """Torsion from the signature operator ``B = G d + d G``.

    With ``C^j_+ = C^j`` intersected with ``ker(d G)`` the value is

        (-1)^{r dim C^r_+} det(G d | C^r_+)^{(-1)^r}
            * prod_{j<r} det(G d | C^j_+ + C^{n-j-1}_+)^{(-1)^j}.

    If ``reconcile`` is true the result is multiplied by
    :func:`signature_sign_correction` so that it equals
    :func:`chirality_torsion`; otherwise the literal product is returned.
    """
    if C.n % 2 == 0:
        raise EvenLength(f"complex has even length n={C.n}")
    if not isinstance(G, ChiralityOperator):
        G = validate_chirality(C, G)
    n, r = C.n, (C.n - 1) // 2
    B = signature_operator(C, G)
    if B.size:
        s = np.linalg.svd(B, compute_uv=False)
        if s[-1] <= rtol * s[0]:
            raise SignatureNotInvertible(f"smallest singular value {s[-1]:.2e}")
    off = C.offsets
    D = C.full_differential()
    Gm = G.full(C.dims)
    dG = D @ Gm
    Gd = Gm @ D
    plus = [_null_basis(dG[:, off[j]:off[j + 1]]) for j in range(n + 1)]

    def restricted_det(degrees):
        cols = []
        for j in degrees:
            V = np.zeros((off[-1], plus[j].shape[1]), dtype=complex)
            V[off[j]:off[j + 1]] = plus[j]
            cols.append(V)
        basis = np.hstack(cols)
        if basis.shape[1] == 0:
            return 1.0 + 0j
        X, *_ = np.linalg.lstsq(basis, Gd @ basis, rcond=None)
        return np.linalg.det(X)

    value = (-1) ** (r * plus[r].shape[1]) * restricted_det([r]) ** ((-1) ** r)
    for j in range(r):
        value *= restricted_det([j, n - j - 1]) ** ((-1) ** j)
    if reconcile:
        value *= signature_sign_correction(C.dims)
    return value


# --------------------------------------------------------------------------
# super and graded traces / determinants
# --------------------------------------------------------------------------


def _blocks_for(dims, A):
    if isinstance(A, np.ndarray) and A.ndim == 2 and len(dims) > 1:
        off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        return [A[off[k]:off[k + 1], off[k]:off[k + 1]] for k in range(len(dims))]
    blocks = [_as_matrix(b, (d, d)) for b, d in zip(A, dims)]
    for k, (b, d) in enumerate(zip(blocks, dims)):
        if b.shape != (d, d):
            raise ShapeMismatch(f"block {k} has shape {b.shape}, expected {(d, d)}")
    return blocks


def _dims_of(C) -> tuple[int, ...]:
    return tuple(C.dims) if hasattr(C, "dims") else tuple(int(d) for d in C)


def super_trace(C, A) -> complex:
    """``sum_k (-1)^k tr A_k``; ``C`` is a complex or a list of dimensions."""
    blocks = _blocks_for(_dims_of(C), A)
    return sum((-1) ** k * np.trace(b) for k, b in enumerate(blocks))


def graded_trace(C, A) -> complex:
    """``sum_k (-1)^k k tr A_k``."""
    blocks = _blocks_for(_dims_of(C), A)
    return sum((-1) ** k * k * np.trace(b) for k, b in enumerate(blocks))


def _block_dets(blocks):
    dets = []
    for k, b in enumerate(blocks):
        if b.shape[0] == 0:
            dets.append(1.0 + 0j)
            continue
        sv = np.linalg.svd(b, compute_uv=False)
        if sv[-1] <= 1e-13 * sv[0]:
            raise SingularBlock(f"block {k} is singular")
        dets.append(np.linalg.det(b))
    return dets


def super_det(C, A) -> complex:
    """``prod_k det(A_k)^{(-1)^k}``."""
    dets = _block_dets(_blocks_for(_dims_of(C), A))
    out = 1.0 + 0j
    for k, d in enumerate(dets):
        out *= d if k % 2 == 0 else 1 / d
    return out


def graded_det(C, A) -> complex:
    """``prod_k det(A_k)^{(-1)^k k}``."""
    dets = _block_dets(_blocks_for(_dims_of(C), A))
    out = 1.0 + 0j
    for k, d in enumerate(dets):
        out *= d ** ((-1) ** k * k)
    return out


def supercommutator(S, s_deg: int, T, t_deg: int, dims) -> np.ndarray:
    """``[S, T] = S T - (-1)^{|S||T|} T S`` on full matrices."""
    return S @ T - (-1) ** (s_deg * t_deg) * T @ S


# --------------------------------------------------------------------------
# contractions and the variation formulas
# --------------------------------------------------------------------------


def contraction_from_complex(C: CochainComplex) -> CochainContraction:
    """Contraction obtained from the pseudo-inverse of the full differential.

    For an acyclic complex ``D^+`` has degree -1 and ``D D^+ + D^+ D`` is the
    sum of the orthogonal projections onto ``ker D`` and its complement.
    """
    C.check_acyclic()
    off = C.offsets
    Dp = np.linalg.pinv(C.full_differential(), rcond=RANK_RTOL)
    blocks = [np.zeros((0, C.dims[0]), dtype=complex)]
    for j in range(1, C.n + 1):
        blocks.append(Dp[off[j - 1]:off[j], off[j]:off[j + 1]])
    return CochainContraction(tuple(blocks))


def contraction_from_complements(C: CochainComplex, complements=None) -> CochainContraction:
    """Contraction sending ``d a -> a`` on ``B^j`` and vanishing on ``A^j``.

    Different complements give genuinely different (non-orthogonal)
    contractions, which is useful for independence checks.
    """
    C.check_acyclic()
    n = C.n
    if complements is None:
        comps = [_pivot_complement(C.d(k), C.dims[k], C.scale) for k in range(n + 1)]
    else:
        comps = _check_complements(C, complements)
    blocks = [np.zeros((0, C.dims[0]), dtype=complex)]
    for j in range(1, n + 1):
        M = np.hstack([C.d(j - 1) @ comps[j - 1], comps[j]])
        target = np.hstack([comps[j - 1], np.zeros((C.dims[j - 1], comps[j].shape[1]))])
        blocks.append(target @ np.linalg.inv(M) if M.size else np.zeros((C.dims[j - 1], C.dims[j])))
    return CochainContraction(tuple(blocks))


def torsion_derivative_wrt_differential(C: CochainComplex, a, k: CochainContraction | None = None,
                                        tol: float = 1e-10) -> complex:
    """Derivative at ``z = 0`` of ``log tau(C(z), G)`` for ``d(z) = d + z a + O(z^2)``.

    Parameters
    ----------
    a : sequence of arrays
        Degree +1 perturbation, ``a[j] : C^j -> C^{j+1}``, with ``d a + a d = 0``.
    k : CochainContraction, optional
        Defaults to :func:`contraction_from_complex`.  The result is
        independent of the choice.

    Returns
    -------
    complex
        ``-str(a k)``.  The chirality is held fixed and does not enter.
    """
    n = C.n
    a = [_as_matrix(a[j], (C.dims[j + 1], C.dims[j])) for j in range(n)]
    for j, aj in enumerate(a):
        if aj.shape != (C.dims[j + 1], C.dims[j]):
            raise ShapeMismatch(f"perturbation block {j} has shape {aj.shape}")
    scale = max(1.0, max((np.linalg.norm(x) for x in list(C.differentials) + a), default=1.0))
    for j in range(n - 1):
        comm = C.d(j + 1) @ a[j] + a[j + 1] @ C.d(j)
        if comm.size and np.linalg.norm(comm) > tol * scale * scale:
            raise NotAPerturbation(f"[d, a] != 0 in degree {j}")
    if k is None:
        k = contraction_from_complex(C)
    total = 0j
    for j in range(1, n + 1):
        if C.dims[j] == 0:
            continue
        total += (-1) ** j * np.trace(a[j - 1] @ k.blocks[j])
    return -total


def torsion_derivative_wrt_chirality(C: CochainComplex, family: Callable[[float], ChiralityOperator],
                                     t0: float = 0.0, h: float = 1e-5, derivative=None) -> complex:
    """``1/2 str(G' G)`` for a differentiable family of chiralities.

    ``derivative`` may supply the blocks of ``dG/dt`` at ``t0``; otherwise a
    central difference with step ``h`` is used.
    """
    n = C.n

    def get(t):
        G = family(t)
        return G if isinstance(G, ChiralityOperator) else validate_chirality(C, G)

    G0 = get(t0)
    if derivative is None:
        Gp, Gm = get(t0 + h), get(t0 - h)
        dG = [(Gp.blocks[k] - Gm.blocks[k]) / (2 * h) for k in range(n + 1)]
    else:
        dG = [_as_matrix(b) for b in derivative]
    # (G' G) restricted to C^k is G'_{n-k} G_k
    blocks = [dG[n - k] @ G0.blocks[k] for k in range(n + 1)]
    return 0.5 * super_trace(C, blocks)


def restricted_trace(P: ProjectorFamily, i: int) -> complex:
    """``tr`` of ``A_i`` restricted to ``ran Pi_i`` (equal to ``tr(Pi_i A_i)``)."""
    return np.trace(P.projectors[i] @ P.operators[i])


def _grid_index(P: ProjectorFamily, t0: float) -> int:
    i = int(np.argmin(np.abs(P.ts - t0)))
    if not np.isclose(P.ts[i], t0, rtol=0, atol=1e-12 * max(1.0, abs(t0))):
        raise ShapeMismatch(f"t0={t0} is not a grid point")
    if i == 0 or i == len(P.ts) - 1:
        raise ShapeMismatch("t0 must be an interior grid point")
    return i


def _operator_derivative(P: ProjectorFamily, i: int) -> np.ndarray:
    t_m, t_p = P.ts[i - 1], P.ts[i + 1]
    return (P.operators[i + 1] - P.operators[i - 1]) / (t_p - t_m)


def projector_trace_derivative(P: ProjectorFamily, t0: float) -> complex:
    """``tr(Pi A')`` at ``t0``: the derivative of ``t -> tr_{ran Pi_t} A_t``."""
    i = _grid_index(P, t0)
    return np.trace(P.projectors[i] @ _operator_derivative(P, i))


def projector_logdet_derivative(P: ProjectorFamily, t0: float) -> complex:
    """Derivative of ``log det`` of ``A_t`` on ``ran Pi_t`` at ``t0``.

    Equals ``tr(Pi A' (A|_C)^{-1})``; the restricted inverse is taken on
    ``ran Pi`` and extended by zero on ``ker Pi``.
    """
    i = _grid_index(P, t0)
    V, Wt = _range_factors(P.projectors[i])
    A_on_range = Wt @ P.operators[i] @ V
    return np.trace(np.linalg.solve(A_on_range, Wt @ _operator_derivative(P, i) @ V))


def _range_factors(Pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``Pi = V Wt`` with ``V`` an orthonormal basis of the range and ``Wt V = 1``."""
    U, s, _ = np.linalg.svd(Pi)
    k = int(np.count_nonzero(s > 1e-9 * max(1.0, s[0]))) if s.size else 0
    V = U[:, :k]
    return V, V.conj().T @ Pi


def restricted_logdet(P: ProjectorFamily, i: int) -> complex:
    """``log det`` of ``A_i`` restricted to ``ran Pi_i`` (principal branch)."""
    V, Wt = _range_factors(P.projectors[i])
    return complex(np.log(np.linalg.det(Wt @ P.operators[i] @ V)))


# --------------------------------------------------------------------------
# direct sums
# --------------------------------------------------------------------------


def direct_sum(C1: CochainComplex, C2: CochainComplex) -> CochainComplex:
    """Degree-wise direct sum ``C1 + C2`` (``C1`` coordinates first)."""
    if C1.n != C2.n:
        raise ShapeMismatch("direct sum needs complexes of equal length")
    mats = [sla.block_diag(C1.d(k), C2.d(k)) for k in range(C1.n)]
    dims = [a + b for a, b in zip(C1.dims, C2.dims)]
    return validate_complex(mats, dims=dims)


def direct_sum_sign(C1: CochainComplex, C2: CochainComplex) -> int:
    """Sign relating the refined torsion of ``C1 + C2`` (bases concatenated per degree) to the product.

    With ``a_j, b_j`` the ranks of the differentials it is
    ``(-1)^{sum a_j b_j + sum a_j b_{j-1}}``; chirality torsions need no sign.
    """
    a = [C1.rank(k) for k in range(C1.n + 1)]
    b = [C2.rank(k) for k in range(C2.n + 1)]
    e = sum(x * y for x, y in zip(a, b)) + sum(a[j] * b[j - 1] for j in range(1, len(a)))
    return -1 if e % 2 else 1


def direct_sum_chirality(G1: ChiralityOperator, G2: ChiralityOperator) -> ChiralityOperator:
    return ChiralityOperator(tuple(sla.block_diag(a, b) for a, b in zip(G1.blocks, G2.blocks)))
