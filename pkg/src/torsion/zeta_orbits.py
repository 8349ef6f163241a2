"""Twisted Ruelle zeta functions from periodic-orbit catalogs.

The exactly solvable source is the suspension of a hyperbolic toral
automorphism ``A`` in SL(2, Z) with constant roof 1.  Closed orbits of
period ``n`` are ``A``-orbits of fixed points of ``A^n`` on the torus; a
fixed point corresponds to a class ``m`` in ``Z^2 / (A^n - I) Z^2``.  The
fundamental group of the mapping torus is ``Z^2 x| Z`` with
``t v t^{-1} = A v``, and the orbit through the class ``m`` has holonomy
``rho(m) rho(t)^n``.

With ``x = e^{-s}`` the zeta function is

    zeta(s) = prod_gamma det(1 - rho(gamma) x^{l(gamma)}),

which for a trivial fiber representation and ``rho(t) = u`` equals
``(1 - u lam x)(1 - u x / lam) / (1 - sigma u x)^2`` with ``sigma = sign tr A``
and ``lam > 1`` the modulus of the expanding eigenvalue.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import sympy as sp
from sympy.matrices.normalforms import smith_normal_decomp

from .errors import CatalogIncomplete, ConvergenceWarning, NotHyperbolic, SchemaError, ShapeMismatch

try:  # compiled kernel
    from ._orbits import primitive_representatives as _kernel_compiled
except ImportError:  # pragma: no cover - depends on the build
    _kernel_compiled = None
from ._orbits_py import primitive_representatives as _kernel_python

KERNEL = "compiled" if _kernel_compiled is not None else "python"

__all__ = [
    "KERNEL",
    "order_at_resonance",
    "mobius",
    "SuspensionSystem",
    "RepOnMappingTorus",
    "OrbitCatalog",
    "catalog_suspension",
    "zeta_partial",
    "zeta_exact_suspension",
    "zeta_trace_formula",
    "trace_formula_log_coefficients",
    "log_series_from_catalog",
    "zeta_series_from_catalog",
    "continued_zeta_from_catalog",
    "laurent_leading_coefficient",
    "convergence_constant",
    "divisor_identity",
]


def order_at_resonance(m_k: Sequence[int], q: int) -> int:
    """Order ``(-1)^{q+1} sum_k (-1)^k k m_k`` of the zeta function at a resonance."""
    total = sum((-1) ** k * k * int(m) for k, m in enumerate(m_k))
    return (-1) ** (q + 1) * total


@lru_cache(maxsize=None)
def mobius(n: int) -> int:
    if n == 1:
        return 1
    out, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            out = -out
        p += 1
    if m > 1:
        out = -out
    return out


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _int_matmul(X, Y):
    return ((X[0][0] * Y[0][0] + X[0][1] * Y[1][0], X[0][0] * Y[0][1] + X[0][1] * Y[1][1]),
            (X[1][0] * Y[0][0] + X[1][1] * Y[1][0], X[1][0] * Y[0][1] + X[1][1] * Y[1][1]))


@dataclass(frozen=True)
class SuspensionSystem:
    """Hyperbolic ``A`` in SL(2, Z) with unit roof."""

    matrix: tuple[tuple[int, int], tuple[int, int]]

    @classmethod
    def from_entries(cls, entries: Sequence[int]) -> "SuspensionSystem":
        a, b, c, d = (int(x) for x in entries)
        return cls(((a, b), (c, d)))

    def __post_init__(self):
        (a, b), (c, d) = self.matrix
        if a * d - b * c != 1:
            raise NotHyperbolic(f"det A = {a * d - b * c}, expected 1")
        if abs(a + d) <= 2:
            raise NotHyperbolic(f"|tr A| = {abs(a + d)} <= 2")

    @property
    def trace(self) -> int:
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def expansion(self) -> float:
        """Leading eigenvalue modulus ``lam > 1``."""
        t = abs(self.trace)
        return (t + math.sqrt(t * t - 4)) / 2

    @property
    def entropy(self) -> float:
        return math.log(self.expansion)

    @property
    def trace_sign(self) -> int:
        return 1 if self.trace > 0 else -1

    def power(self, n: int):
        out = ((1, 0), (0, 1))
        base = self.matrix
        while n:
            if n & 1:
                out = _int_matmul(out, base)
            base = _int_matmul(base, base)
            n >>= 1
        return out

    def trace_power(self, n: int) -> int:
        """``tr A^n`` from the recurrence ``t_n = t t_{n-1} - t_{n-2}``."""
        t0, t1 = 2, self.trace
        if n == 0:
            return 2
        for _ in range(n - 1):
            t0, t1 = t1, self.trace * t1 - t0
        return t1

    def fixed_point_count(self, n: int) -> int:
        """``|det(A^n - I)|`` via the matrix power."""
        (a, b), (c, d) = self.power(n)
        return abs((a - 1) * (d - 1) - b * c)

    def det_invariant(self, n: int) -> int:
        """``det(I - P)`` for the return map ``P = A^n`` of a period ``n`` orbit."""
        return 2 - self.trace_power(n)

    @property
    def sign_datum(self) -> int | None:
        """``q`` with ``(-1)^q det(I - P) > 0`` for all orbits, or ``None`` if none exists."""
        return 1 if self.trace > 2 else None

    def class_group(self, n: int):
        """Smith data of ``M = A^n - I``: ``(d1, d2, U, Uinv)`` with ``U M V = diag(d1, d2)``."""
        return _class_group(self.matrix, n)


@lru_cache(maxsize=256)
def _class_group(A, n):
    P = sp.Matrix(SuspensionSystem(A).power(n))
    M = P - sp.eye(2)
    D, U, V = smith_normal_decomp(M, domain=sp.ZZ)
    d1, d2 = abs(int(D[0, 0])), abs(int(D[1, 1]))
    # absorb signs so that the diagonal is positive
    S = sp.diag(1 if D[0, 0] > 0 else -1, 1 if D[1, 1] > 0 else -1)
    U = S * U
    Uinv = U.inv()
    return d1, d2, tuple(tuple(int(x) for x in U.row(i)) for i in range(2)), \
        tuple(tuple(int(x) for x in Uinv.row(i)) for i in range(2))


def _rational_phase(num: Sequence[int], den: int, m: np.ndarray) -> np.ndarray:
    """``exp(2 pi i (num . m) / den)`` with the exponent reduced exactly mod ``den``."""
    mm = np.mod(np.asarray(m, dtype=np.int64), den)
    a = (int(num[0]) % den) * mm[..., 0] + (int(num[1]) % den) * mm[..., 1]
    return np.exp(2j * np.pi * (np.mod(a, den) / den))


@dataclass(frozen=True)
class RepOnMappingTorus:
    """Representation of ``Z^2 x| Z`` given by ``rho(t)``, ``rho(e1)``, ``rho(e2)``.

    ``characters`` optionally records exact data for diagonal fiber
    representations: slot ``i`` carries ``v -> exp(2 pi i (num_i . v) / den)``.
    """

    t: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    characters: tuple | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.t.shape[0]

    @classmethod
    def trivial(cls, d: int = 1) -> "RepOnMappingTorus":
        I = np.eye(d, dtype=complex)
        return cls(I, I.copy(), I.copy(), tuple(((0, 0), 1) for _ in range(d)), "trivial")

    @classmethod
    def monodromy(cls, u) -> "RepOnMappingTorus":
        """Trivial on the fiber, ``rho(t) = u`` (scalar or matrix)."""
        U = np.atleast_2d(np.asarray(u, dtype=complex))
        I = np.eye(U.shape[0], dtype=complex)
        return cls(U, I, I.copy(), tuple(((0, 0), 1) for _ in range(U.shape[0])), "monodromy")

    @classmethod
    def induced(cls, system: SuspensionSystem, p: int, w: Sequence[int] = (1, 0), u: complex = 1.0) -> "RepOnMappingTorus":
        """Rep induced from a fiber character fixed by ``A^p``.

        The character is ``v -> exp(2 pi i xi . v)`` with
        ``xi = ((A^p)^T - I)^{-1} w``.  ``rho(v) = diag(chi(A^i v))`` and
        ``rho(t) = u S`` with ``S`` the cyclic shift, so that
        ``rho(t) rho(v) rho(t)^{-1} = rho(A v)``.
        """
        Ap = sp.Matrix(system.power(p))
        xi = (Ap.T - sp.eye(2)).inv() * sp.Matrix(list(w))
        den = int(sp.ilcm(*[sp.Rational(x).q for x in xi]))
        base = [int(x * den) for x in xi]
        A = sp.Matrix(system.matrix)
        chars = []
        vec = sp.Matrix(base)
        for _ in range(p):
            chars.append(((int(vec[0]), int(vec[1])), den))
            vec = A.T * vec  # chi(A^{i+1} v) = exp(2 pi i ((A^T)^{i+1} xi) . v)
        e1 = np.diag([np.exp(2j * np.pi * float(Fraction(c[0][0], c[1]) % 1)) for c in chars]).astype(complex)
        e2 = np.diag([np.exp(2j * np.pi * float(Fraction(c[0][1], c[1]) % 1)) for c in chars]).astype(complex)
        S = np.zeros((p, p), dtype=complex)
        for j in range(p):
            S[(j - 1) % p, j] = 1.0
        return cls(u * S, e1, e2, tuple(chars), f"induced(p={p}, w={tuple(w)})")

    def direct_sum(self, other: "RepOnMappingTorus") -> "RepOnMappingTorus":
        chars = None
        if self.characters is not None and other.characters is not None:
            chars = tuple(self.characters) + tuple(other.characters)
        return RepOnMappingTorus(sla.block_diag(self.t, other.t), sla.block_diag(self.e1, other.e1),
                                 sla.block_diag(self.e2, other.e2), chars, f"{self.label} + {other.label}")

    def validate(self, system: SuspensionSystem, tol: float = 1e-10) -> "RepOnMappingTorus":
        for M in (self.t, self.e1, self.e2):
            if M.shape != (self.dim, self.dim):
                raise ShapeMismatch("representation matrices must be square of equal size")
        if np.abs(self.e1 @ self.e2 - self.e2 @ self.e1).max() > tol:
            raise ShapeMismatch("fiber generators do not commute")
        (a, b), (c, d) = system.matrix
        tinv = np.linalg.inv(self.t)
        for (x, y), E in (((a, c), self.e1), ((b, d), self.e2)):
            lhs = self.fiber((x, y))
            rhs = self.t @ E @ tinv
            if np.abs(lhs - rhs).max() > tol * max(1.0, np.abs(rhs).max()):
                raise ShapeMismatch("rho(A v) != rho(t) rho(v) rho(t)^-1")
        return self

    def fiber(self, m) -> np.ndarray:
        m1, m2 = int(m[0]), int(m[1])
        return _int_power(self.e1, m1) @ _int_power(self.e2, m2)

    def fiber_batch(self, ms: np.ndarray) -> np.ndarray:
        """Fiber holonomies for an ``(N, 2)`` integer array, shape ``(N, d, d)``."""
        ms = np.asarray(ms)
        if self.characters is not None:
            diag = np.stack([_rational_phase(num, den, ms) for num, den in self.characters], axis=-1)
            out = np.zeros(ms.shape[:-1] + (self.dim, self.dim), dtype=complex)
            idx = np.arange(self.dim)
            out[..., idx, idx] = diag
            return out
        return np.stack([self.fiber(m) for m in ms]) if len(ms) else np.zeros((0, self.dim, self.dim), complex)

    def holonomy(self, m, n: int) -> np.ndarray:
        return self.fiber(m) @ np.linalg.matrix_power(self.t, n)

    @property
    def fiber_is_trivial(self) -> bool:
        return bool(np.allclose(self.e1, np.eye(self.dim)) and np.allclose(self.e2, np.eye(self.dim)))


def _int_power(M: np.ndarray, k: int) -> np.ndarray:
    if k >= 0:
        return np.linalg.matrix_power(M, k)
    return np.linalg.matrix_power(np.linalg.inv(M), -k)


@dataclass(frozen=True)
class OrbitCatalog:
    """Primitive closed orbits of the suspension up to period ``n_max``.

    ``counts[n]`` is the number of primitive orbits of period ``n``.  When
    ``classes`` is present, ``classes[n]`` is an ``(counts[n], 2)`` integer
    array of fiber classes (one representative fixed point per orbit).
    """

    system: SuspensionSystem
    n_max: int
    counts: dict[int, int]
    classes: dict[int, np.ndarray] | None = None
    kernel: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def resolved(self) -> bool:
        return self.classes is not None

    def records(self):
        """Iterate ``(period, multiplicity, fiber_class_or_None, det_invariant)``."""
        for n in sorted(self.counts):
            det = self.system.det_invariant(n)
            if self.classes is None:
                if self.counts[n]:
                    yield n, self.counts[n], None, det
            else:
                for m in self.classes[n]:
                    yield n, 1, (int(m[0]), int(m[1])), det

    def total_orbits(self) -> int:
        return sum(self.counts.values())

    def to_json(self) -> dict:
        orbits = [{"length": n, "multiplicity": mult, "fiber_class": cls, "det_invariant": det}
                  for n, mult, cls, det in self.records()]
        return {"schema": "catalog.v1", "matrix": [x for row in self.system.matrix for x in row],
                "n_max": self.n_max, "q": self.system.sign_datum, "resolved": self.resolved, "orbits": orbits}

    @classmethod
    def from_json(cls, data: dict) -> "OrbitCatalog":
        if data.get("schema") != "catalog.v1":
            raise SchemaError("expected schema catalog.v1")
        system = SuspensionSystem.from_entries(data["matrix"])
        n_max = int(data["n_max"])
        counts = {n: 0 for n in range(1, n_max + 1)}
        resolved = bool(data.get("resolved"))
        classes = {n: [] for n in counts} if resolved else None
        for o in data["orbits"]:
            n = int(o["length"])
            if not 1 <= n <= n_max:
                raise SchemaError(f"orbit length {n} outside 1..{n_max}")
            counts[n] += int(o.get("multiplicity", 1))
            if resolved:
                classes[n].append(o["fiber_class"])
        if resolved:
            classes = {n: np.array(v, dtype=np.int64).reshape(-1, 2) for n, v in classes.items()}
        return cls(system, n_max, counts, classes, kernel="json")


def _primitive_counts(system: SuspensionSystem, n_max: int) -> dict[int, int]:
    fix = {n: system.fixed_point_count(n) for n in range(1, n_max + 1)}
    out = {}
    for n in range(1, n_max + 1):
        pts = sum(mobius(n // d) * fix[d] for d in _divisors(n))
        out[n] = pts // n
    return out


def _resolve_period(system: SuspensionSystem, n: int, kernel: Callable):
    d1, d2, U, Uinv = system.class_group(n)
    A = system.matrix
    # T = U A U^{-1} acting on Z/d1 x Z/d2
    T = _int_matmul(_int_matmul(U, A), Uinv)
    t11, t12 = T[0][0] % d1, T[0][1] % d1
    t21, t22 = T[1][0] % d2, T[1][1] % d2
    reps = kernel(d1, d2, t11, t12, t21, t22, n)
    k = np.stack([reps // d2, reps % d2], axis=1)
    Ui = np.array(Uinv, dtype=np.int64)
    m = k @ Ui.T
    return n, m


MAX_RESOLVED_POINTS = 1 << 31


def catalog_suspension(system: SuspensionSystem, n_max: int, resolve_classes: bool = False,
                       kernel: str = "auto", threads: int = 1) -> OrbitCatalog:
    """Primitive orbits of period ``<= n_max``.

    Counts come from Moebius inversion of ``#Fix(A^n) = |det(A^n - I)|`` in
    exact integers.  With ``resolve_classes`` every orbit is enumerated by
    walking the ``A``-action on ``Z^2 / (A^n - I) Z^2`` (Smith normal form
    coordinates); the walk uses the compiled kernel when available.
    """
    if n_max < 0:
        raise ShapeMismatch("n_max must be non-negative")
    counts = _primitive_counts(system, n_max)
    if not resolve_classes:
        return OrbitCatalog(system, n_max, counts, None, kernel="count")
    if kernel == "auto":
        kernel = KERNEL
    fn = _kernel_compiled if kernel == "compiled" else _kernel_python
    if fn is None:
        raise ImportError("compiled orbit kernel is not built")
    if system.fixed_point_count(n_max) > MAX_RESOLVED_POINTS:
        raise ShapeMismatch(f"period {n_max} has too many fixed points to resolve")
    periods = list(range(1, n_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda n: _resolve_period(system, n, fn), periods))
    else:
        results = [_resolve_period(system, n, fn) for n in periods]
    classes = {n: m for n, m in sorted(results)}
    for n, m in classes.items():
        if len(m) != counts[n]:
            raise AssertionError(f"period {n}: walked {len(m)} orbits, expected {counts[n]}")
    return OrbitCatalog(system, n_max, counts, classes, kernel=kernel, meta={"threads": threads})


def divisor_identity(catalog: OrbitCatalog) -> list[tuple[int, int, int]]:
    """``(n, sum_{n'|n} n' P_{n'}, #Fix(A^n))`` with ``#Fix`` from ``|2 - tr A^n|``."""
    out = []
    for n in range(1, catalog.n_max + 1):
        lhs = sum(d * catalog.counts[d] for d in _divisors(n))
        rhs = abs(2 - catalog.system.trace_power(n))
        out.append((n, lhs, rhs))
    return out


def convergence_constant(rep: RepOnMappingTorus) -> float:
    """Growth rate ``C`` with ``||rho(gamma)|| <= exp(C l(gamma))`` (heuristic bound).

    Only ``t`` advances along the flow, so ``C = max(0, log ||rho(t)||)``
    when the fiber representation is unitary.  Fiber classes of period ``n``
    orbits grow like ``lam^n``, so a non-unitary fiber admits no such bound
    and ``inf`` is returned.
    """
    for E in (rep.e1, rep.e2):
        if not np.allclose(E.conj().T @ E, np.eye(rep.dim), atol=1e-12):
            return math.inf
    return max(0.0, math.log(np.linalg.norm(rep.t, 2)))


def _log_factor(H: np.ndarray, x: complex) -> complex:
    d = H.shape[-1]
    return np.log(np.linalg.det(np.eye(d) - H * x))


def zeta_partial(catalog: OrbitCatalog, rep: RepOnMappingTorus, s: complex, L_cut: float,
                 warn: bool = True) -> complex:
    """``prod_{l(gamma) <= L_cut} det(1 - rho(gamma) e^{-s l(gamma)})``.

    Factors are accumulated as a sum of logarithms in a fixed order (by period,
    then by class) and exponentiated once.
    """
    s = complex(s)
    if L_cut > catalog.n_max:
        raise CatalogIncomplete(f"L_cut={L_cut} exceeds the catalog bound {catalog.n_max}")
    if warn:
        C = convergence_constant(rep)
        if s.real <= C + catalog.system.entropy:
            warnings.warn(f"Re(s)={s.real:.3g} is outside the convergence region Re(s) > {C + catalog.system.entropy:.3g}",
                          ConvergenceWarning, stacklevel=2)
    trivial_fiber = rep.fiber_is_trivial
    if not catalog.resolved and not trivial_fiber:
        raise CatalogIncomplete("fiber classes are needed for a representation nontrivial on the fiber")
    total = 0j
    tpow = np.eye(rep.dim, dtype=complex)
    for n in range(1, int(math.floor(L_cut)) + 1):
        tpow = tpow @ rep.t
        x = np.exp(-s * n)
        if catalog.counts.get(n, 0) == 0:
            continue
        if trivial_fiber:
            total += catalog.counts[n] * _log_factor(tpow, x)
        else:
            F = rep.fiber_batch(catalog.classes[n])
            H = F @ tpow
            dets = np.linalg.det(np.eye(rep.dim) - H * x)
            total += np.sum(np.log(dets))
    return complex(np.exp(total))


def zeta_exact_suspension(system: SuspensionSystem, u, s: complex) -> complex:
    """Closed form of the zeta function for a trivial fiber representation.

    ``u`` is the holonomy of ``t`` (scalar or matrix); for a matrix the value
    is the product over its eigenvalues.
    """
    lam = system.expansion
    sigma = system.trace_sign
    x = np.exp(-complex(s))
    eig = np.linalg.eigvals(np.atleast_2d(np.asarray(u, dtype=complex)))
    out = 1.0 + 0j
    for v in eig:
        out *= (1 - v * lam * x) * (1 - v * x / lam) / (1 - sigma * v * x) ** 2
    return complex(out)


def trace_formula_log_coefficients(system: SuspensionSystem, rep: RepOnMappingTorus, n_terms: int) -> np.ndarray:
    """Coefficients ``c_n = -1/n sum_{x in Fix(A^n)} tr rho(m_x) rho(t)^n`` of ``log zeta``.

    Sums over every fixed point class of ``A^n`` directly, without grouping
    into orbits, so it is independent of the orbit walk.
    """
    out = np.zeros(n_terms + 1, dtype=complex)
    tn = np.eye(rep.dim, dtype=complex)
    for n in range(1, n_terms + 1):
        tn = tn @ rep.t
        d1, d2, _, Uinv = system.class_group(n)
        k1, k2 = np.meshgrid(np.arange(d1, dtype=np.int64), np.arange(d2, dtype=np.int64), indexing="ij")
        k = np.stack([k1.ravel(), k2.ravel()], axis=1)
        m = k @ np.array(Uinv, dtype=np.int64).T
        if rep.fiber_is_trivial:
            traces = len(m) * np.trace(tn)
        else:
            traces = np.einsum("nij,ji->n", rep.fiber_batch(m), tn).sum()
        out[n] = -traces / n
    return out


def zeta_trace_formula(system: SuspensionSystem, rep: RepOnMappingTorus, s: complex, n_terms: int) -> complex:
    """``exp(sum_{n <= N} c_n e^{-sn})`` from :func:`trace_formula_log_coefficients`."""
    c = trace_formula_log_coefficients(system, rep, n_terms)
    x = np.exp(-complex(s))
    return complex(np.exp(sum(c[n] * x ** n for n in range(1, n_terms + 1))))


def log_series_from_catalog(catalog: OrbitCatalog, rep: RepOnMappingTorus, degree: int | None = None) -> np.ndarray:
    """Taylor coefficients of ``log zeta`` in ``x = e^{-s}`` up to ``x^degree``.

    Uses ``log det(1 - H x^l) = -sum_j tr(H^j) x^{jl} / j`` over the cataloged
    primitive orbits; exact to this order when ``degree <= n_max``.
    """
    degree = catalog.n_max if degree is None else degree
    if degree > catalog.n_max:
        raise CatalogIncomplete(f"degree {degree} exceeds the catalog bound {catalog.n_max}")
    if not catalog.resolved and not rep.fiber_is_trivial:
        raise CatalogIncomplete("fiber classes are needed for this representation")
    log_coeffs = np.zeros(degree + 1, dtype=complex)
    tpow = np.eye(rep.dim, dtype=complex)
    for n in range(1, degree + 1):
        tpow = tpow @ rep.t
        if catalog.counts.get(n, 0) == 0:
            continue
        if rep.fiber_is_trivial:
            H = tpow[None].copy()
            mult = catalog.counts[n]
        else:
            H = rep.fiber_batch(catalog.classes[n]) @ tpow
            mult = 1
        P = np.broadcast_to(np.eye(rep.dim), H.shape).copy()
        for j in range(1, degree // n + 1):
            P = P @ H
            log_coeffs[j * n] -= mult * np.trace(P, axis1=1, axis2=2).sum() / j
    return log_coeffs


def zeta_series_from_catalog(catalog: OrbitCatalog, rep: RepOnMappingTorus, degree: int | None = None) -> np.ndarray:
    """Taylor coefficients of ``zeta`` in ``x = e^{-s}`` up to ``x^degree``."""
    log_coeffs = log_series_from_catalog(catalog, rep, degree)
    degree = len(log_coeffs) - 1
    # a' = (log zeta)' a
    a = np.zeros(degree + 1, dtype=complex)
    a[0] = 1.0
    for k in range(1, degree + 1):
        a[k] = sum(j * log_coeffs[j] * a[k - j] for j in range(1, k + 1)) / k
    return a


def continued_zeta_from_catalog(catalog: OrbitCatalog, rep: RepOnMappingTorus, degree: int | None = None,
                                rtol: float = 1e-9):
    """Rational continuation of the zeta function from its orbit expansion.

    The series coefficients ``a_k`` in ``x = e^{-s}`` are exact up to the
    catalog bound.  For ``M = 1, 2, ...`` the denominator ``q`` (``q_0 = 1``)
    is fitted by least squares to ``sum_j q_j a_{k-j} = 0`` for all
    ``M < k <= degree``; the first ``M`` with a negligible residual fixes the
    rational degree.  The suspension zeta is rational, so the continuation
    is exact up to rounding.

    Returns ``(f, M)`` with ``f(s)`` the continued zeta function.
    """
    a = zeta_series_from_catalog(catalog, rep, degree)
    N = len(a) - 1
    scale = max(1.0, float(np.abs(a).max()))
    chosen = None
    for M in range(1, N // 2 + 1):
        rows = np.array([[a[k - j] for j in range(1, M + 1)] for k in range(M + 1, N + 1)])
        rhs = -a[M + 1:N + 1]
        qtail, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        if np.linalg.norm(rows @ qtail - rhs) <= rtol * scale:
            chosen = (M, np.concatenate([[1.0], qtail]))
            break
    if chosen is None:
        raise CatalogIncomplete("series too short to identify a rational continuation")
    M, qc = chosen
    pc = np.array([sum(qc[j] * a[k - j] for j in range(min(k, M) + 1)) for k in range(M + 1)])

    def f(s):
        x = np.exp(-np.asarray(s, dtype=complex))
        return np.polyval(pc[::-1], x) / np.polyval(qc[::-1], x)

    return f, M


def laurent_leading_coefficient(f: Callable, order: int, center: complex = 0.0, radius: float = 0.5,
                                points: int = 64) -> complex:
    """Mean of ``(s - center)^{-order} f(s)`` over a circle (trapezoid rule).

    Equals the leading Laurent coefficient when ``f`` has order ``order`` at
    ``center`` and no other zero or pole in the closed disk.
    """
    theta = 2 * np.pi * np.arange(points) / points
    z = center + radius * np.exp(1j * theta)
    vals = np.array([f(v) for v in z]) * (z - center) ** (-order)
    return complex(vals.mean())
