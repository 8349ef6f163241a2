"""Spectral cuts, renormalized zeta functions and the dynamical torsion.

For a cut ``0 < lam < 1`` let ``C_lam`` be the direct sum of the resonant
complexes with ``|s0| < lam``.  With ``q`` the sign datum,

    zeta_lam(s) = zeta(s) * grdet_{C_lam}(Lie + s)^{(-1)^q},
    tau         = (-1)^{Q_lam} * zeta_lam(0)^{(-1)^q} * tau(C_lam, G),

and ``tau`` does not depend on the cut.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complex_core import (
    ChiralityOperator,
    CochainComplex,
    chirality_torsion,
    direct_sum,
    direct_sum_chirality,
    graded_det,
    validate_chirality,
    validate_complex,
)
from .contact_model import (
    ResonanceModel,
    assemble_nabla,
    contact_chirality,
    lie_blocks,
    random_resonance_model,
    torsion_sign_exponent_q,
)
from .errors import ConstraintViolation, CutOnResonance, NotAcyclic, ShapeMismatch
from .zeta_orbits import SuspensionSystem, laurent_leading_coefficient, order_at_resonance, zeta_exact_suspension

__all__ = [
    "ResonantComplex",
    "SyntheticZeta",
    "SuspensionZeta",
    "ResonanceSpectrum",
    "DynamicalTorsion",
    "CutReport",
    "winding_order",
    "renormalized_zeta",
    "dynamical_torsion",
    "cut_invariance_report",
    "leading_laurent_coefficient",
    "small_cut_torsion",
    "random_spectrum",
    "zero_resonance",
]

CUT_TOL = 1e-12
CONTOUR_POINTS = 64


@dataclass(frozen=True)
class ResonantComplex:
    """Acyclic complex of resonant states at ``s0`` with its eigen-action and chirality."""

    s0: complex
    complex: CochainComplex
    chirality: ChiralityOperator
    lie: tuple[np.ndarray, ...]
    model: ResonanceModel | None = None

    @property
    def r(self) -> int:
        return (self.complex.n - 1) // 2

    @property
    def dims(self) -> tuple[int, ...]:
        return self.complex.dims

    @property
    def Q(self) -> int:
        return torsion_sign_exponent_q(self.dims, self.r)

    def order(self, q: int) -> int:
        return order_at_resonance(self.dims, q)

    def grdet_shifted(self, s: complex) -> complex:
        return graded_det(self.complex, [L + s * np.eye(L.shape[0]) for L in self.lie])

    @classmethod
    def from_model(cls, model: ResonanceModel) -> "ResonantComplex":
        C = assemble_nabla(model)
        C.check_acyclic()
        return cls(model.s0, C, contact_chirality(model), tuple(lie_blocks(model)), model)

    @classmethod
    def plain(cls, s0: complex, C: CochainComplex, G, lie: Sequence, tol: float = 1e-9) -> "ResonantComplex":
        """Validate a hand-made resonant complex.

        Requirements: acyclic, ``lie + s0`` nilpotent and commuting with the
        differential and the chirality.  For ``s0 != 0`` the torsion must
        also satisfy ``tau^{-1} = (-1)^Q grdet(lie)``, since that identity is
        what makes cuts across ``s0`` consistent.
        """
        s0 = complex(s0)
        C.check_acyclic()
        if not isinstance(G, ChiralityOperator):
            G = validate_chirality(C, G)
        lie = tuple(np.asarray(L, dtype=complex).reshape(d, d) for L, d in zip(lie, C.dims))
        if len(lie) != C.n + 1:
            raise ShapeMismatch("one eigen-action block per degree is required")
        n = C.n
        for k, L in enumerate(lie):
            d = C.dims[k]
            if d and np.abs(np.linalg.matrix_power(L + s0 * np.eye(d), d)).max(initial=0.0) > tol:
                raise ConstraintViolation(f"lie + s0 is not nilpotent in degree {k}")
            if k < n and np.abs(C.d(k) @ L - lie[k + 1] @ C.d(k)).max(initial=0.0) > tol:
                raise ConstraintViolation(f"lie does not commute with the differential in degree {k}")
            if np.abs(G.blocks[k] @ L - lie[n - k] @ G.blocks[k]).max(initial=0.0) > tol:
                raise ConstraintViolation(f"lie does not commute with the chirality in degree {k}")
        rc = cls(s0, C, G, lie, None)
        if abs(s0) > 0:
            lhs = 1 / chirality_torsion(C, G)
            rhs = (-1) ** rc.Q * graded_det(C, lie)
            if abs(lhs / rhs - 1) > tol:
                raise ConstraintViolation("torsion identity fails for this resonant complex")
        return rc


def zero_resonance(dims: Sequence[int], rng: np.random.Generator | int | None = None,
                   nilpotent: bool = False) -> ResonantComplex:
    """Acyclic complex at ``s0 = 0`` with symmetric ``dims`` and a commuting eigen-action.

    Differentials pair ``C^{2i}`` with ``C^{2i+1}`` isomorphically (so the
    dimensions must satisfy ``d_{2i} = d_{2i+1}``).  The eigen-action is zero,
    or with ``nilpotent=True`` a nilpotent ``N`` transported along the pairing
    and the chirality.
    """
    rng = np.random.default_rng(rng)
    dims = [int(d) for d in dims]
    n = len(dims) - 1
    if n % 2 == 0:
        raise ShapeMismatch("odd length required")
    if any(dims[2 * i] != dims[2 * i + 1] for i in range((n + 1) // 2)):
        raise ShapeMismatch("zero_resonance pairs C^{2i} with C^{2i+1}")
    if any(dims[k] != dims[n - k] for k in range(n + 1)):
        raise ShapeMismatch("dimensions must be symmetric")
    mats = []
    frames = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d) for d in dims]
    for k in range(n):
        if k % 2 == 0:
            mats.append(frames[k + 1] @ np.linalg.inv(frames[k]))
        else:
            mats.append(np.zeros((dims[k + 1], dims[k]), dtype=complex))
    C = validate_complex(mats, dims=dims, tol=1e-9)
    r = (n - 1) // 2
    # chirality compatible with a transported eigen-action:  G_k = F_{n-k} F_k^{-1}
    lower = [frames[n - k] @ np.linalg.inv(frames[k]) for k in range(r + 1)]
    G = ChiralityOperator.from_lower(lower, n)
    lie = []
    for k, d in enumerate(dims):
        N = np.zeros((d, d), dtype=complex)
        if nilpotent and d > 1:
            N[np.arange(d - 1), np.arange(1, d)] = 1.0
        lie.append(frames[k] @ N @ np.linalg.inv(frames[k]))
    return ResonantComplex.plain(0.0, C, G, lie)


# --------------------------------------------------------------------------
# zeta handles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticZeta:
    """``exp(poly(s)) * prod (s - s0)^{m(s0)}`` with exact orders by construction."""

    poly: tuple[complex, ...]
    factors: tuple[tuple[complex, int], ...]

    def __call__(self, s: complex) -> complex:
        s = complex(s)
        out = np.exp(sum(c * s ** j for j, c in enumerate(self.poly)))
        for s0, m in self.factors:
            out *= (s - s0) ** m
        return complex(out)

    def order_at(self, s: complex, tol: float = 1e-12) -> int:
        return sum(m for s0, m in self.factors if abs(s0 - s) < tol)

    def singularities(self) -> list[complex]:
        return [s0 for s0, m in self.factors if m != 0]

    def describe(self) -> dict:
        return {"kind": "synthetic", "poly": [[c.real, c.imag] for c in map(complex, self.poly)],
                "factors": [{"s0": [complex(s0).real, complex(s0).imag], "order": int(m)} for s0, m in self.factors]}


@dataclass(frozen=True)
class SuspensionZeta:
    """Closed-form zeta of a cat-map suspension with ``rho(t) = u``."""

    system: SuspensionSystem
    u: complex

    def __call__(self, s: complex) -> complex:
        return zeta_exact_suspension(self.system, self.u, s)

    def singularities(self) -> list[complex]:
        lam = self.system.expansion
        sig = self.system.trace_sign
        u = complex(self.u)
        pts = []
        for w, in ((u * lam,), (u / lam,), (sig * u,)):
            if w != 0:
                base = complex(np.log(w))
                pts.extend(base + 2j * np.pi * k for k in range(-3, 4))
        return pts

    def describe(self) -> dict:
        return {"kind": "suspension", "matrix": [x for row in self.system.matrix for x in row],
                "u": [complex(self.u).real, complex(self.u).imag]}


def winding_order(f: Callable[[complex], complex], center: complex, radius: float, points: int = 512) -> int:
    """Zero/pole order of ``f`` inside a circle from the winding of ``f``."""
    theta = 2 * np.pi * np.arange(points + 1) / points
    vals = np.array([f(center + radius * np.exp(1j * t)) for t in theta])
    phase = np.unwrap(np.angle(vals))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


# --------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceSpectrum:
    """Resonant complexes inside the unit disk together with a zeta function."""

    entries: tuple[ResonantComplex, ...]
    zeta: Callable[[complex], complex]
    q: int
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, entries: Sequence, zeta, q: int | None = None, check: bool = True,
              rng: np.random.Generator | int | None = 0) -> "ResonanceSpectrum":
        items = tuple(e if isinstance(e, ResonantComplex) else ResonantComplex.from_model(e) for e in entries)
        if items:
            ns = {e.complex.n for e in items}
            if len(ns) != 1:
                raise ShapeMismatch("all resonant complexes must have the same length")
        if q is None:
            q = items[0].r if items else 1
        spec = cls(items, zeta, int(q))
        if check:
            spec.validate(rng)
        return spec

    def validate(self, rng: np.random.Generator | int | None = 0, tol: float = 1e-8) -> "ResonanceSpectrum":
        rng = np.random.default_rng(rng)
        centers = [e.s0 for e in self.entries]
        if len(set(np.round(centers, 12))) != len(centers):
            raise ShapeMismatch("duplicate resonances")
        for e in self.entries:
            m = e.order(self.q)
            for _ in range(5):
                s = e.s0 + complex(*rng.uniform(-0.5, 0.5, size=2))
                left = e.grdet_shifted(s) ** ((-1) ** (self.q + 1))
                if abs(left / (s - e.s0) ** m - 1) > tol:
                    raise ConstraintViolation(f"graded determinant identity fails at s0={e.s0}")
            if abs(e.s0) < 1:
                radius = self._isolation_radius(e.s0)
                found = winding_order(self.zeta, e.s0, radius)
                if found != m:
                    raise ConstraintViolation(f"zeta has order {found} at s0={e.s0}, expected {m}")
        return self

    def _isolation_radius(self, s0: complex) -> float:
        others = [e.s0 for e in self.entries if e.s0 != s0]
        sing = getattr(self.zeta, "singularities", lambda: [])()
        others += [p for p in sing if abs(p - s0) > 1e-12]
        d = min([abs(p - s0) for p in others] + [1.0])
        return 0.4 * d

    def inside(self, lam: float) -> list[ResonantComplex]:
        check_cut(self, lam)
        return [e for e in self.entries if abs(e.s0) < lam]

    def with_zeta(self, zeta) -> "ResonanceSpectrum":
        return ResonanceSpectrum(self.entries, zeta, self.q, dict(self.meta))


def check_cut(spec: ResonanceSpectrum, lam: float) -> None:
    if not 0 < lam < 1:
        raise CutOnResonance(f"cut {lam} is outside (0, 1)")
    for e in spec.entries:
        if abs(abs(e.s0) - lam) < CUT_TOL:
            raise CutOnResonance(f"cut {lam} passes through the resonance {e.s0}")


def _grdet_inside(inside: Sequence[ResonantComplex], s: complex, q: int) -> complex:
    out = 1.0 + 0j
    for e in inside:
        out *= e.grdet_shifted(s) ** ((-1) ** q)
    return out


def renormalized_zeta(spec: ResonanceSpectrum, lam: float, s: complex) -> complex:
    """``zeta(s) grdet_{C_lam}(Lie + s)^{(-1)^q}``, regular and nonzero on ``|s| <= lam``.

    At a resonance inside the cut the removable singularity is evaluated
    by a contour mean on a small circle around ``s``.
    """
    inside = spec.inside(lam)
    s = complex(s)

    def direct(z):
        return spec.zeta(z) * _grdet_inside(inside, z, spec.q)

    near = [e.s0 for e in inside if abs(e.s0 - s) < 1e-8]
    if not near:
        return complex(direct(s))
    radius = 0.5 * (lam - abs(s)) if abs(s) < lam else 1e-3
    theta = 2 * np.pi * np.arange(CONTOUR_POINTS) / CONTOUR_POINTS
    return complex(np.mean([direct(s + radius * np.exp(1j * t)) for t in theta]))


@dataclass(frozen=True)
class DynamicalTorsion:
    value: complex
    sign: int
    zeta_factor: complex
    torsion_factor: complex
    cut: float
    inside: tuple[complex, ...]


def _sum_complex(inside: Sequence[ResonantComplex]):
    C, G = inside[0].complex, inside[0].chirality
    for e in inside[1:]:
        C = direct_sum(C, e.complex)
        G = direct_sum_chirality(G, e.chirality)
    return C, G


def dynamical_torsion(spec: ResonanceSpectrum, lam: float) -> DynamicalTorsion:
    """``(-1)^{Q_lam} zeta_lam(0)^{(-1)^q} tau(C_lam, G)`` for one admissible cut."""
    inside = spec.inside(lam)
    for e in inside:
        if not e.complex.is_acyclic:
            raise NotAcyclic(f"resonant complex at {e.s0} is not acyclic")
    Q = sum(e.Q for e in inside)
    if any(abs(e.s0) < 1e-14 for e in spec.entries):
        # removable singularity at 0: mean value on |s| = lam / 2
        theta = 2 * np.pi * np.arange(CONTOUR_POINTS) / CONTOUR_POINTS
        pts = 0.5 * lam * np.exp(1j * theta)
        zl0 = complex(np.mean([spec.zeta(z) * _grdet_inside(inside, z, spec.q) for z in pts]))
    else:
        zl0 = complex(spec.zeta(0.0) * _grdet_inside(inside, 0.0, spec.q))
    zeta_factor = zl0 ** ((-1) ** spec.q)
    if inside:
        C, G = _sum_complex(inside)
        torsion_factor = complex(chirality_torsion(C, G))
    else:
        torsion_factor = 1.0 + 0j
    sign = (-1) ** int(Q)
    return DynamicalTorsion(sign * zeta_factor * torsion_factor, sign, zeta_factor, torsion_factor,
                            float(lam), tuple(e.s0 for e in inside))


@dataclass(frozen=True)
class CutReport:
    max_deviation: float
    results: tuple[DynamicalTorsion, ...]
    moved: tuple[tuple[float, float, tuple[str, ...]], ...]


def cut_invariance_report(spec: ResonanceSpectrum, cuts: Sequence[float]) -> CutReport:
    """Largest pairwise relative deviation of the dynamical torsion over ``cuts``.

    ``moved`` lists, for consecutive cuts, which factors (sign, zeta, torsion)
    changed between them.
    """
    results = tuple(dynamical_torsion(spec, lam) for lam in cuts)
    dev = 0.0
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            a, b = results[i].value, results[j].value
            dev = max(dev, abs(a - b) / max(abs(a), abs(b)))
    moved = []
    for a, b in zip(results, results[1:]):
        names = []
        if a.sign != b.sign:
            names.append("sign")
        if abs(a.zeta_factor / b.zeta_factor - 1) > 1e-12:
            names.append("zeta")
        if abs(a.torsion_factor / b.torsion_factor - 1) > 1e-12:
            names.append("torsion")
        moved.append((a.cut, b.cut, tuple(names)))
    return CutReport(dev, results, tuple(moved))


def leading_laurent_coefficient(spec: ResonanceSpectrum, radius: float | None = None) -> complex:
    """Leading coefficient ``c`` of ``zeta(s) = c s^{m(0)} + ...`` at ``s = 0``."""
    zero = [e for e in spec.entries if abs(e.s0) < 1e-14]
    m0 = zero[0].order(spec.q) if zero else 0
    if radius is None:
        radius = 0.5 * min([abs(e.s0) for e in spec.entries if abs(e.s0) >= 1e-14]
                           + [abs(p) for p in getattr(spec.zeta, "singularities", lambda: [])() if abs(p) >= 1e-14]
                           + [1.0])
    return laurent_leading_coefficient(spec.zeta, m0, 0.0, radius, CONTOUR_POINTS)


def small_cut_torsion(spec: ResonanceSpectrum) -> complex:
    """``(-1)^{Q_0} c^{(-1)^q} tau(C(0), G)``, with ``c = zeta(0)`` if 0 is not a resonance."""
    zero = [e for e in spec.entries if abs(e.s0) < 1e-14]
    c = leading_laurent_coefficient(spec) if zero else complex(spec.zeta(0.0))
    value = c ** ((-1) ** spec.q)
    if zero:
        e = zero[0]
        value *= (-1) ** e.Q * chirality_torsion(e.complex, e.chirality)
    return complex(value)


def random_spectrum(rng: np.random.Generator | int | None, n_resonances: int = 2, r: int = 1,
                    include_zero: bool = False, poly_degree: int = 3, outside: int = 2) -> ResonanceSpectrum:
    """Random spectrum with resonances in the unit disk and a matching synthetic zeta.

    Moduli are drawn from ``[0.1, 0.9]`` and kept at least ``0.04`` apart so
    that cuts between them are well separated.  Each resonance gets a random
    coefficient profile, so orders are typically non-zero.
    """
    rng = np.random.default_rng(rng)
    while True:
        mods = np.sort(rng.uniform(0.1, 0.9, size=n_resonances))
        if n_resonances < 2 or np.min(np.diff(mods)) > 0.04:
            break
    entries = []
    for radius in mods:
        s0 = radius * np.exp(1j * rng.uniform(-np.pi, np.pi))
        w0 = int(rng.integers(0, 3))
        w1 = w0 + int(rng.integers(0 if w0 else 1, 3))
        factors = [(int(v0), int(v0 + rng.integers(0, 2))) for v0 in rng.integers(1, 3, size=r - 1)]
        model = random_resonance_model(r, max(w0, 1), s0, int(rng.integers(0, 2)), rng,
                                       profile=(w0, w1), scalar_factors=factors)
        entries.append(ResonantComplex.from_model(model))
    if include_zero:
        dims = [1, 1] * (r + 1)
        entries.insert(0, zero_resonance(dims, rng, nilpotent=False))
    q = r
    factors = [(e.s0, e.order(q)) for e in entries]
    for _ in range(outside):
        s0 = rng.uniform(1.2, 2.5) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        factors.append((complex(s0), int(rng.choice([-2, -1, 1, 2]))))
    poly = tuple(complex(c) for c in 0.3 * (rng.normal(size=poly_degree + 1) + 1j * rng.normal(size=poly_degree + 1)))
    zeta = SyntheticZeta(poly, tuple((complex(s0), int(m)) for s0, m in factors))
    return ResonanceSpectrum.build(entries, zeta, q, rng=rng)
