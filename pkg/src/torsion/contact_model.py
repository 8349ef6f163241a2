"""Finite-dimensional resonant complexes of a contact flow.

A :class:`ResonanceModel` carries graded coefficient spaces ``C_0^k``
(``k = 0 .. 2r``) with

* ``lam[k]``  the generalized eigen-action, ``-s0 + nilpotent``,
* ``psi[k] : C_0^k -> C_0^{k+1}`` the horizontal part of the connection,
* ``lef[k] : C_0^k -> C_0^{k+2}`` the Lefschetz action of ``dtheta``,

subject to ``psi[k+1] psi[k] = -lef[k] lam[k]``, ``psi`` commuting with
``lef``, ``lam`` commuting with both, and ``lef^{r-k}`` invertible on
``C_0^k`` for ``k <= r``.  The full complex is
``C^k = C_0^{k-1} ^ theta + C_0^k`` with

    nabla g          = psi g + (-1)^k lam g ^ theta,      g in C_0^k,
    nabla (f ^ theta) = (psi f) ^ theta + (-1)^{k-1} lef f, f in C_0^{k-1}.

Generation
----------
The generator tensors an ``r = 1`` coefficient factor with ``r - 1`` scalar
factors ``(v0, v1, v0)`` using Koszul signs.  The coefficient factor has
dimensions ``(w0, w1, w0)``; the default profile ``(W, 2W)`` with scalar
factors ``(1, 2)`` realizes ``W (x) Lambda^k V*`` with ``dim V* = 2r``.
Other profiles reach non-zero orders ``m(s0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .complex_core import (
    ChiralityOperator,
    CochainComplex,
    chirality_torsion,
    graded_det,
    numerical_rank,
    validate_complex,
)
from .errors import ConstraintViolation, DegenerateEigenvalue, ShapeMismatch
from .exterior import lefschetz_chirality_blocks
from .zeta_orbits import order_at_resonance

__all__ = [
    "ResonanceModel",
    "ComputeTorsionReport",
    "DEGENERATE_EIGENVALUES",
    "check_eigenvalue",
    "random_resonance_model",
    "psi_trivial_model",
    "assemble_nabla",
    "contact_chirality",
    "lie_blocks",
    "contact_signature_operator",
    "signature_condition",
    "j_projector",
    "plus_dims",
    "torsion_sign_exponent_q",
    "verify_computetorsion",
]

DEGENERATE_EIGENVALUES = (0.0, 1.0, -1.0)
CONSTRAINT_TOL = 1e-10


def check_eigenvalue(s0: complex, allow_degenerate: bool = False) -> complex:
    s0 = complex(s0)
    if not allow_degenerate:
        for bad in DEGENERATE_EIGENVALUES:
            if abs(s0 - bad) < 1e-12:
                raise DegenerateEigenvalue(f"s0 = {s0} is excluded")
    return s0


def _nilpotent(w: int, depth: int) -> np.ndarray:
    """Jordan blocks of size at most ``depth + 1`` (depth 0 gives zero)."""
    N = np.zeros((w, w), dtype=complex)
    i = 0
    while i < w:
        size = min(depth + 1, w - i)
        for j in range(size - 1):
            N[i + j, i + j + 1] = 1.0
        i += size
    return N


@dataclass(frozen=True)
class ResonanceModel:
    """Graded model of the resonant states at one eigenvalue ``s0``."""

    r: int
    s0: complex
    dims0: tuple[int, ...]
    lam: tuple[np.ndarray, ...]
    psi: tuple[np.ndarray, ...]
    lef: tuple[np.ndarray, ...]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return 2 * self.r + 1

    @property
    def q(self) -> int:
        """Dimension of the stable bundle of the contact flow."""
        return self.r

    def d0(self, k: int) -> int:
        return self.dims0[k] if 0 <= k <= 2 * self.r else 0

    @property
    def dims(self) -> list[int]:
        return [self.d0(k - 1) + self.d0(k) for k in range(self.n + 1)]

    def lef_power(self, k: int, p: int) -> np.ndarray:
        M = np.eye(self.d0(k), dtype=complex)
        for i in range(p):
            M = self.lef[k + 2 * i] @ M
        return M

    def constraint_residuals(self) -> dict[str, float]:
        """Relative residual of every defining identity."""
        R = 2 * self.r
        scale = max([1.0] + [np.linalg.norm(x) for x in self.lam + self.psi + self.lef])
        out = {"psi^2 = -lef lam": 0.0, "psi lef = lef psi": 0.0, "[psi, lam] = 0": 0.0,
               "[lef, lam] = 0": 0.0, "lam + s0 nilpotent": 0.0, "lefschetz isomorphism": 0.0}

        def upd(key, M):
            if M.size:
                out[key] = max(out[key], float(np.abs(M).max()) / (scale * scale))

        for k in range(R - 1):
            upd("psi^2 = -lef lam", self.psi[k + 1] @ self.psi[k] + self.lef[k] @ self.lam[k])
            upd("[lef, lam] = 0", self.lam[k + 2] @ self.lef[k] - self.lef[k] @ self.lam[k])
        for k in range(R):
            upd("[psi, lam] = 0", self.lam[k + 1] @ self.psi[k] - self.psi[k] @ self.lam[k])
        for k in range(R - 2):
            upd("psi lef = lef psi", self.psi[k + 2] @ self.lef[k] - self.lef[k + 1] @ self.psi[k])
        for k in range(R + 1):
            d = self.d0(k)
            if d:
                N = self.lam[k] + self.s0 * np.eye(d)
                upd("lam + s0 nilpotent", np.linalg.matrix_power(N, d))
        for k in range(self.r + 1):
            P = self.lef_power(k, self.r - k)
            if P.shape[0] != P.shape[1] or (P.size and numerical_rank(P) < P.shape[0]):
                out["lefschetz isomorphism"] = np.inf
        return out

    def validate(self, tol: float = CONSTRAINT_TOL) -> "ResonanceModel":
        R = 2 * self.r
        if len(self.dims0) != R + 1 or len(self.lam) != R + 1 or len(self.psi) != R or len(self.lef) != max(R - 1, 0):
            raise ShapeMismatch("wrong number of graded blocks")
        for k in range(R + 1):
            if self.lam[k].shape != (self.d0(k), self.d0(k)):
                raise ShapeMismatch(f"lam[{k}] has shape {self.lam[k].shape}")
            if self.dims0[k] != self.dims0[R - k]:
                raise ShapeMismatch("coefficient dimensions must be symmetric")
        for k in range(R):
            if self.psi[k].shape != (self.d0(k + 1), self.d0(k)):
                raise ShapeMismatch(f"psi[{k}] has shape {self.psi[k].shape}")
        for k in range(R - 1):
            if self.lef[k].shape != (self.d0(k + 2), self.d0(k)):
                raise ShapeMismatch(f"lef[{k}] has shape {self.lef[k].shape}")
        bad = {k: v for k, v in self.constraint_residuals().items() if v > tol}
        if bad:
            raise ConstraintViolation("violated: " + ", ".join(f"{k} ({v:.1e})" for k, v in bad.items()))
        return self


@dataclass(frozen=True)
class ComputeTorsionReport:
    lhs: complex
    rhs: complex
    Q: int
    order: int
    q: int
    detlie_max_error: float
    rel_error: float


# --------------------------------------------------------------------------
# generation by graded tensor products
# --------------------------------------------------------------------------


def _layout(dimsA, dimsB):
    """Block layout of the graded tensor product, ordered by the A-degree."""
    D = len(dimsA) + len(dimsB) - 2
    layout = []
    for k in range(D + 1):
        parts, off = [], 0
        for i in range(len(dimsA)):
            j = k - i
            if 0 <= j < len(dimsB):
                size = dimsA[i] * dimsB[j]
                parts.append((i, j, off, size))
                off += size
        layout.append((parts, off))
    return layout


def _tensor(dimsA, dimsB, opA, degA, opB, degB):
    """Graded tensor ``opA (x) opB`` with the Koszul sign ``(-1)^{degB * i}``.

    ``opA``/``opB`` map degree to block, or are ``None`` for the identity; a
    missing degree means the operator vanishes there.
    """
    lay = _layout(dimsA, dimsB)
    deg = degA + degB
    out = {}
    for k in range(len(lay)):
        if not 0 <= k + deg < len(lay):
            continue
        (src, ns), (dst, nt) = lay[k], lay[k + deg]
        M = np.zeros((nt, ns), dtype=complex)
        target = {(i, j): (off, sz) for i, j, off, sz in dst}
        for i, j, off, sz in src:
            key = (i + degA, j + degB)
            if key not in target:
                continue
            a = np.eye(dimsA[i]) if opA is None else opA.get(i)
            b = np.eye(dimsB[j]) if opB is None else opB.get(j)
            if a is None or b is None:
                continue
            to, tsz = target[key]
            M[to:to + tsz, off:off + sz] = (-1) ** (i * degB) * np.kron(a, b)
        out[k] = M
    return out, [n for _, n in lay]


def _coefficient_factor(w0, w1, s0, depth, rng, conjugate=True):
    """``r = 1`` factor with dims ``(w0, w1, w0)``: ``psi_1 psi_0 = -lam_0``."""
    N0 = _nilpotent(w0, depth)
    L0 = -s0 * np.eye(w0) + N0
    u = w1 - w0
    Lu = -s0 * np.eye(u) + _nilpotent(u, depth)
    L1 = np.block([[L0, np.zeros((w0, u))], [np.zeros((u, w0)), Lu]])
    g = (1.3 + 0.2j) * np.eye(w0) + 0.7 * N0 + 0.1 * N0 @ N0
    P = np.vstack([g, np.zeros((u, w0))])
    Q = np.hstack([-L0 @ np.linalg.inv(g), np.zeros((w0, u))]) if w0 else np.zeros((0, w1))
    if conjugate and w1:
        S = np.eye(w1) + 0.3 * rng.normal(size=(w1, w1))
        Si = np.linalg.inv(S)
        P, Q, L1 = S @ P, Q @ Si, S @ L1 @ Si
    dims = [w0, w1, w0]
    lam = {0: L0, 1: L1, 2: L0.copy()}
    psi = {0: P, 1: Q}
    lef = {0: np.eye(w0, dtype=complex)}
    return dims, lam, psi, lef


def _add_scalar_factor(dims, lam, psi, lef, s0, v0, v1, rng):
    """Tensor the current module with a scalar factor ``(v0, v1, v0)``."""
    vd = [v0, v1, v0]
    P = rng.normal(size=(v1, v0)) + 0j
    Q = np.linalg.pinv(P)  # Q P = 1
    A = {k: (0.9 - 0.4j) * np.eye(dims[k]) + 0.5 * (lam[k] + s0 * np.eye(dims[k])) for k in range(len(dims))}
    B = {k: -lam[k] @ np.linalg.inv(A[k]) for k in range(len(dims))}
    t1, new_dims = _tensor(dims, vd, psi, 1, None, 0)
    t2, _ = _tensor(dims, vd, A, 0, {0: P}, 1)
    t3, _ = _tensor(dims, vd, B, 0, {1: Q}, 1)
    new_psi = {k: t1.get(k, 0) + t2.get(k, 0) + t3.get(k, 0) for k in range(len(new_dims) - 1)}
    new_lam, _ = _tensor(dims, vd, lam, 0, None, 0)
    lA, _ = _tensor(dims, vd, lef, 2, None, 0)
    lB, _ = _tensor(dims, vd, None, 0, {0: np.eye(v0)}, 2)
    new_lef = {k: lA.get(k, 0) + lB.get(k, 0) for k in range(len(new_dims) - 2)}
    return new_dims, new_lam, new_psi, new_lef


def random_resonance_model(r: int, W_dim: int, s0: complex, nilpotent_depth: int = 0,
                           rng: np.random.Generator | int | None = None,
                           profile: tuple[int, int] | None = None,
                           scalar_factors: Sequence[tuple[int, int]] | None = None,
                           conjugate: bool = True, allow_degenerate: bool = False) -> ResonanceModel:
    """Generate a valid :class:`ResonanceModel`.

    Parameters
    ----------
    r : int
        Contact rank, ``n = 2r + 1``; ``r >= 1``.
    W_dim : int
        Coefficient dimension ``m`` of the default profile ``(m, 2m)``.
    s0 : complex
        Eigenvalue; ``0`` and ``+-1`` are rejected.
    nilpotent_depth : int
        Jordan block size minus one, capped at ``W_dim``.
    profile : (w0, w1), optional
        Dimensions of the ``r = 1`` coefficient factor, ``w1 >= w0 >= 0``.
    scalar_factors : list of (v0, v1), optional
        ``r - 1`` scalar factors, default ``(1, 2)`` each.
    conjugate : bool
        Apply a random change of basis in the middle degree of the first factor.
    """
    if r < 1:
        raise ShapeMismatch("resonance models need r >= 1")
    if W_dim < 1 and profile is None:
        raise ShapeMismatch("W_dim must be positive")
    s0 = check_eigenvalue(s0, allow_degenerate)
    rng = np.random.default_rng(rng)
    depth = max(0, min(int(nilpotent_depth), max(W_dim, 1)))
    w0, w1 = profile if profile is not None else (W_dim, 2 * W_dim)
    if not (w1 >= w0 >= 0) or w1 + w0 == 0:
        raise ShapeMismatch(f"bad coefficient profile {(w0, w1)}")
    factors = list(scalar_factors) if scalar_factors is not None else [(1, 2)] * (r - 1)
    if len(factors) != r - 1:
        raise ShapeMismatch(f"need {r - 1} scalar factors")
    dims, lam, psi, lef = _coefficient_factor(w0, w1, s0, depth, rng, conjugate)
    for v0, v1 in factors:
        if not (v1 >= v0 >= 1):
            raise ShapeMismatch(f"bad scalar factor {(v0, v1)}")
        dims, lam, psi, lef = _add_scalar_factor(dims, lam, psi, lef, s0, v0, v1, rng)
    R = 2 * r
    model = ResonanceModel(
        r=r,
        s0=s0,
        dims0=tuple(int(d) for d in dims),
        lam=tuple(lam[k] for k in range(R + 1)),
        psi=tuple(psi[k] for k in range(R)),
        lef=tuple(lef[k] for k in range(R - 1)),
        meta={"W_dim": W_dim, "nilpotent_depth": depth, "profile": [w0, w1],
              "scalar_factors": [list(f) for f in factors]},
    )
    return model.validate()


def psi_trivial_model(r: int, W_dim: int, s0: complex, nilpotent_depth: int = 0,
                      allow_degenerate: bool = False) -> ResonanceModel:
    """Model with ``psi = 0``: coefficients only in the middle degree ``r``.

    ``psi^2 = -lef lam`` then holds because every ``lef`` block vanishes.
    """
    s0 = check_eigenvalue(s0, allow_degenerate)
    R = 2 * r
    dims0 = [0] * (R + 1)
    dims0[r] = W_dim
    lam = [np.zeros((d, d), dtype=complex) for d in dims0]
    lam[r] = -s0 * np.eye(W_dim) + _nilpotent(W_dim, nilpotent_depth)
    psi = [np.zeros((dims0[k + 1], dims0[k]), dtype=complex) for k in range(R)]
    lef = [np.zeros((dims0[k + 2], dims0[k]), dtype=complex) for k in range(R - 1)]
    model = ResonanceModel(r, s0, tuple(dims0), tuple(lam), tuple(psi), tuple(lef),
                           meta={"W_dim": W_dim, "nilpotent_depth": nilpotent_depth, "psi_trivial": True})
    return model.validate()


# --------------------------------------------------------------------------
# assembled complex
# --------------------------------------------------------------------------


def assemble_nabla(model: ResonanceModel, tol: float = 1e-10) -> CochainComplex:
    """Differential of ``C^k = C_0^{k-1} ^ theta + C_0^k`` (``[f ; g]`` coordinates)."""
    model.validate()
    d0 = model.d0
    dims = model.dims
    mats = []
    for k in range(model.n):
        M = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        a = d0(k - 1)
        if d0(k):
            M[: d0(k), a:] = (-1) ** k * model.lam[k]
            if d0(k + 1):
                M[d0(k):, a:] = model.psi[k]
        if a:
            if d0(k):
                M[: d0(k), :a] = model.psi[k - 1]
            if d0(k + 1):
                M[d0(k):, :a] = (-1) ** (k - 1) * model.lef[k - 1]
        mats.append(M)
    return validate_complex(mats, dims=dims, tol=tol)


def contact_chirality(model: ResonanceModel) -> ChiralityOperator:
    blocks = lefschetz_chirality_blocks(list(model.dims0), list(model.lef), model.r, exact=False)
    return ChiralityOperator(tuple(blocks))


def lie_blocks(model: ResonanceModel) -> list[np.ndarray]:
    """The eigen-action on each ``C^k`` (acts diagonally on ``[f ; g]``)."""
    out = []
    for k in range(model.n + 1):
        a, b = model.d0(k - 1), model.d0(k)
        M = np.zeros((a + b, a + b), dtype=complex)
        if a:
            M[:a, :a] = model.lam[k - 1]
        if b:
            M[a:, a:] = model.lam[k]
        out.append(M)
    return out


def contact_signature_operator(model: ResonanceModel) -> np.ndarray:
    """Full matrix of ``B = G d + d G`` for the contact chirality."""
    C = assemble_nabla(model)
    G = contact_chirality(model).full(C.dims)
    D = C.full_differential()
    return G @ D + D @ G


def signature_condition(model: ResonanceModel) -> float:
    """Ratio of smallest to largest singular value of the contact signature operator."""
    s = np.linalg.svd(contact_signature_operator(model), compute_uv=False)
    return float(s[-1] / s[0]) if s.size else 1.0


def j_projector(model: ResonanceModel, k: int) -> np.ndarray:
    """``J_k (f ^ theta + g) = f ^ theta - (-1)^k psi f`` on ``C^k``, ``0 <= k <= r``.

    Its image lies in ``C^k`` intersected with ``ker(d G)``.
    """
    if not 0 <= k <= model.r:
        raise ShapeMismatch(f"J_k is defined for 0 <= k <= r, got k={k}")
    a, b = model.d0(k - 1), model.d0(k)
    J = np.zeros((a + b, a + b), dtype=complex)
    J[:a, :a] = np.eye(a)
    if a and b:
        J[a:, :a] = -((-1) ** k) * model.psi[k - 1]
    return J


def plus_dims(model: ResonanceModel) -> list[int]:
    """``dim (C^k intersected with ker(d G))`` for every ``k``."""
    C = assemble_nabla(model)
    D = C.full_differential()
    G = contact_chirality(model).full(C.dims)
    off = C.offsets
    dG = D @ G
    return [C.dims[k] - numerical_rank(dG[:, off[k]:off[k + 1]]) for k in range(C.n + 1)]


def torsion_sign_exponent_q(dims: Sequence[int], r: int) -> int:
    """``Q = sum_{k <= r} (-1)^k (r + 1 - k) dim C^k``."""
    return sum((-1) ** k * (r + 1 - k) * dims[k] for k in range(r + 1))


def verify_computetorsion(model: ResonanceModel, rng: np.random.Generator | int | None = None,
                          samples: int = 5) -> ComputeTorsionReport:
    """Compare ``tau(C, G)^{-1}`` with ``(-1)^Q grdet(lam)`` and test the order identity.

    ``detlie_max_error`` is the largest relative deviation of
    ``grdet(lam + s)^{(-1)^{q+1}}`` from ``(s - s0)^m`` over random samples.
    """
    check_eigenvalue(model.s0)
    C = assemble_nabla(model)
    C.check_acyclic()
    G = contact_chirality(model)
    lam = lie_blocks(model)
    lhs = 1.0 / chirality_torsion(C, G)
    Q = torsion_sign_exponent_q(C.dims, model.r)
    rhs = (-1) ** Q * graded_det(C, lam)
    q = model.q
    order = order_at_resonance(C.dims, q)
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(samples):
        s = model.s0 + complex(*rng.uniform(-1, 1, size=2))
        left = graded_det(C, [L + s * np.eye(L.shape[0]) for L in lam]) ** ((-1) ** (q + 1))
        right = (s - model.s0) ** order
        worst = max(worst, abs(left / right - 1))
    return ComputeTorsionReport(lhs, rhs, Q, order, q, worst, abs(lhs / rhs - 1))
