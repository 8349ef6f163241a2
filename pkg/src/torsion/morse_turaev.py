"""Twisted CW complexes, Turaev torsion, Euler chains and first homology.

Cells are named; the order within each dimension is the orientation datum.
A boundary term of a cell ``a`` is ``(face, sign, path)`` where ``path`` is
an edge walk from the base vertex of ``a`` to the base vertex of ``face``
(steps ``(edge, +1)`` go tail to head).  With edge holonomies ``H_e`` the
walk transports by ``hol = H_last ... H_first`` and the twisted boundary
block is ``sum sign * hol^{-T}`` (the dual local system).

The torsion is the refined torsion of the degree-reversed cochain complex
``D^j = C_{n-j}``, with the basis of every cell transported from the base
point along a spider path.  Such a spider has Euler chain
``e = sum_a (-1)^{|a|} [path_a]`` and changing ``e`` by a cycle ``h``
multiplies the torsion by ``<det rho, h>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
import sympy as sp
from sympy.matrices.normalforms import smith_normal_decomp

from . import exact as ex
from .complex_core import (
    CochainComplex,
    DetLineElement,
    refined_torsion_element,
    validate_complex,
    validate_exact_complex,
)
from .errors import (
    BadEulerChain,
    EndpointMismatch,
    NotACycle,
    NotAComplex,
    NotAcyclic,
    NotFlat,
    ShapeMismatch,
)

__all__ = [
    "Incidence",
    "CWData",
    "LocalSystem",
    "TwistedComplex",
    "Spider",
    "EulerChain",
    "CSChain",
    "H1Group",
    "twisted_boundary",
    "turaev_torsion",
    "tree_spider",
    "reroute",
    "spider_for_euler_chain",
    "h1_group",
    "h1_class",
    "pair_det_rep",
    "euler_transform_check",
    "cs_between",
    "cs_compose",
    "circle",
    "subdivided_circle",
    "lens_space",
    "three_torus",
    "lens_character",
    "lens_torsion_modulus",
    "random_torus_rep",
    "random_lens_rep",
]

Step = tuple[str, int]


def _steps(path) -> tuple[Step, ...]:
    return tuple((str(e), int(s)) for e, s in path)


@dataclass(frozen=True)
class Incidence:
    face: str
    sign: int
    path: tuple[Step, ...] = ()


@dataclass(frozen=True, eq=False)
class CWData:
    """Combinatorial CW (or Thom-Smale) data with paths for the twisting."""

    cells: tuple[tuple[str, ...], ...]
    incidence: Mapping[str, tuple[Incidence, ...]]
    base: Mapping[str, str]
    attaching: Mapping[str, tuple[Step, ...]]
    tree: tuple[str, ...]
    basepoint: str
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.cells) - 1

    @cached_property
    def _index(self) -> dict[str, tuple[int, int]]:
        out = {}
        for j, names in enumerate(self.cells):
            for i, a in enumerate(names):
                if a in out:
                    raise ShapeMismatch(f"cell {a!r} listed twice")
                out[a] = (j, i)
        return out

    def dim_of(self, a: str) -> int:
        return self._index[a][0]

    def position(self, a: str) -> int:
        return self._index[a][1]

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.cells[0]

    @property
    def edges(self) -> tuple[str, ...]:
        return self.cells[1] if self.n >= 1 else ()

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** j * len(c) for j, c in enumerate(self.cells))

    @cached_property
    def ends(self) -> dict[str, tuple[str, str]]:
        """``(tail, head)`` of every edge, read off its boundary terms."""
        out = {}
        for e in self.edges:
            tail = head = None
            for t in self.incidence.get(e, ()):
                if t.sign > 0:
                    head = t.face
                else:
                    tail = t.face
            if tail is None or head is None:
                raise ShapeMismatch(f"edge {e!r} needs one +1 and one -1 boundary term")
            out[e] = (tail, head)
        return out

    def walk_end(self, start: str, path: Sequence[Step]) -> str:
        v = start
        for e, s in path:
            tail, head = self.ends[e]
            src, dst = (tail, head) if s > 0 else (head, tail)
            if v != src:
                raise ShapeMismatch(f"walk breaks at edge {e!r}: at {v!r}, edge starts at {src!r}")
            v = dst
        return v

    def chain_of(self, path: Sequence[Step]) -> np.ndarray:
        z = np.zeros(len(self.edges), dtype=np.int64)
        for e, s in path:
            z[self.position(e)] += s
        return z

    def integer_boundary(self, j: int) -> np.ndarray:
        """Integer matrix of ``C_j -> C_{j-1}``."""
        rows = len(self.cells[j - 1]) if 1 <= j <= self.n else 0
        cols = len(self.cells[j]) if 0 <= j <= self.n else 0
        M = np.zeros((rows, cols), dtype=np.int64)
        if rows and cols:
            for i, a in enumerate(self.cells[j]):
                for t in self.incidence.get(a, ()):
                    M[self.position(t.face), i] += t.sign
        return M

    def boundary_of_chain(self, z) -> dict[str, int]:
        z = np.asarray(z, dtype=np.int64)
        v = self.integer_boundary(1) @ z
        return {x: int(c) for x, c in zip(self.vertices, v) if c}

    def euler_divisor(self) -> dict[str, int]:
        """``sum_a (-1)^{|a|} ([base a] - [basepoint])``; the boundary of every spider chain."""
        out: dict[str, int] = {}
        for j, names in enumerate(self.cells):
            for a in names:
                for v, c in ((self.base[a], 1), (self.basepoint, -1)):
                    out[v] = out.get(v, 0) + c * (-1) ** j
        return {v: c for v, c in out.items() if c}

    @cached_property
    def _tree_adjacency(self) -> dict[str, list[tuple[str, Step]]]:
        adj: dict[str, list] = {v: [] for v in self.vertices}
        for e in self.tree:
            tail, head = self.ends[e]
            adj[tail].append((head, (e, 1)))
            adj[head].append((tail, (e, -1)))
        return adj

    @cached_property
    def _tree_paths(self) -> dict[str, tuple[Step, ...]]:
        """Tree walks from the base point to every vertex."""
        paths = {self.basepoint: ()}
        stack = [self.basepoint]
        while stack:
            v = stack.pop()
            for w, step in self._tree_adjacency[v]:
                if w not in paths:
                    paths[w] = paths[v] + (step,)
                    stack.append(w)
        return paths

    def tree_path(self, u: str, v: str) -> tuple[Step, ...]:
        """Tree walk from ``u`` to ``v``."""
        back = tuple((e, -s) for e, s in reversed(self._tree_paths[u]))
        return _reduce(back + self._tree_paths[v])

    @cached_property
    def non_tree_edges(self) -> tuple[str, ...]:
        tree = set(self.tree)
        return tuple(e for e in self.edges if e not in tree)

    def validate(self) -> "CWData":
        idx = self._index
        if not self.cells or not self.cells[0]:
            raise ShapeMismatch("a CW complex needs at least one vertex")
        if self.basepoint not in self.vertices:
            raise ShapeMismatch("base point must be a vertex")
        for a, (j, _) in idx.items():
            if a not in self.base or self.base[a] not in self.vertices:
                raise ShapeMismatch(f"cell {a!r} lacks a base vertex")
            if j == 0 and self.base[a] != a:
                raise ShapeMismatch(f"vertex {a!r} must be its own base")
            if j == 0 and self.incidence.get(a):
                raise ShapeMismatch("vertices have no boundary")
            for t in self.incidence.get(a, ()):
                if t.face not in idx or idx[t.face][0] != j - 1:
                    raise ShapeMismatch(f"face {t.face!r} of {a!r} has the wrong dimension")
                if t.sign not in (1, -1):
                    raise ShapeMismatch("incidence signs are +-1")
        _ = self.ends
        for a, terms in self.incidence.items():
            for t in terms:
                if self.walk_end(self.base[a], t.path) != self.base[t.face]:
                    raise ShapeMismatch(f"path of {a!r} -> {t.face!r} ends at the wrong vertex")
        for j in range(2, self.n + 1):
            P = self.integer_boundary(j - 1) @ self.integer_boundary(j)
            if P.size and np.any(P):
                raise NotAComplex(f"integer boundary squares to a nonzero map in degree {j}")
        if self.n >= 2:
            for i, D in enumerate(self.cells[2]):
                word = self.attaching.get(D)
                if word is None:
                    raise ShapeMismatch(f"2-cell {D!r} lacks an attaching word")
                if self.walk_end(self.base[D], word) != self.base[D]:
                    raise ShapeMismatch(f"attaching word of {D!r} is not closed")
                if np.any(self.chain_of(word) != self.integer_boundary(2)[:, i]):
                    raise ShapeMismatch(f"attaching word of {D!r} disagrees with its boundary")
        if len(self.tree) != len(self.vertices) - 1 or len(self._tree_paths) != len(self.vertices):
            raise ShapeMismatch("tree must be a spanning tree of the 1-skeleton")
        return self


def _reduce(path) -> tuple[Step, ...]:
    out: list[Step] = []
    for step in path:
        if out and out[-1][0] == step[0] and out[-1][1] == -step[1]:
            out.pop()
        else:
            out.append(step)
    return tuple(out)


# --------------------------------------------------------------------------
# local systems
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalSystem:
    """Flat bundle given by an invertible ``d x d`` holonomy per edge.

    ``cyclotomic = (p, exponents)`` records that ``H_e = zeta_p^{exponent}``
    (``d = 1``) so exact arithmetic over ``Q(zeta_p)`` is available.
    """

    d: int
    holonomy: Mapping[str, np.ndarray]
    cyclotomic: tuple[int, Mapping[str, int]] | None = None

    @classmethod
    def from_matrices(cls, mats: Mapping[str, object]) -> "LocalSystem":
        hol = {str(e): np.atleast_2d(np.asarray(M, dtype=complex)) for e, M in mats.items()}
        ds = {M.shape for M in hol.values()}
        if len(ds) != 1 or next(iter(ds))[0] != next(iter(ds))[1]:
            raise ShapeMismatch("holonomies must be square of one common size")
        for e, M in hol.items():
            if np.linalg.matrix_rank(M) < M.shape[0]:
                raise ShapeMismatch(f"holonomy of {e!r} is singular")
        return cls(next(iter(ds))[0], hol)

    @classmethod
    def character(cls, cw: CWData, p: int, exponents: Mapping[str, int]) -> "LocalSystem":
        """Rank one system ``H_e = exp(2 pi i a_e / p)``; unspecified edges are trivial."""
        exps = {e: int(exponents.get(e, 0)) % p for e in cw.edges}
        hol = {e: np.array([[np.exp(2j * np.pi * a / p)]]) for e, a in exps.items()}
        return cls(1, hol, (int(p), exps))

    def transport(self, path: Sequence[Step]) -> np.ndarray:
        M = np.eye(self.d, dtype=complex)
        for e, s in path:
            H = self.holonomy[e]
            M = (H if s > 0 else np.linalg.inv(H)) @ M
        return M

    def dual_transport(self, path: Sequence[Step]) -> np.ndarray:
        return np.linalg.inv(self.transport(path)).T

    def exponent(self, path: Sequence[Step]) -> int:
        p, exps = self.cyclotomic
        return sum(s * exps[e] for e, s in path) % p

    def flatness_defect(self, cw: CWData) -> float:
        worst = 0.0
        if cw.n >= 2:
            for D in cw.cells[2]:
                M = self.transport(cw.attaching[D])
                worst = max(worst, float(np.abs(M - np.eye(self.d)).max()))
        return worst

    def check(self, cw: CWData, tol: float = 1e-9) -> "LocalSystem":
        missing = set(cw.edges) - set(self.holonomy)
        if missing:
            raise ShapeMismatch(f"no holonomy for edges {sorted(missing)}")
        defect = self.flatness_defect(cw)
        if defect > tol:
            raise NotFlat(f"holonomy around a 2-cell differs from the identity by {defect:.2e}")
        return self


def lens_character(cw: CWData, p: int, a: int = 1) -> LocalSystem:
    """Character of the lens space group sending the generator to ``zeta_p^a``."""
    return LocalSystem.character(cw, p, {"t": a})


def random_lens_rep(rng: np.random.Generator, p: int, d: int = 2) -> LocalSystem:
    """``rho(t) = S diag(zeta^{a_i}) S^{-1}`` for random ``S`` and exponents."""
    S = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d)
    a = rng.integers(1, p, size=d)
    T = S @ np.diag(np.exp(2j * np.pi * a / p)) @ np.linalg.inv(S)
    return LocalSystem.from_matrices({"t": T})


def random_torus_rep(rng: np.random.Generator, d: int = 2, unitary: bool = False) -> LocalSystem:
    """Commuting holonomies ``S diag(w) S^{-1}`` on the three edges of the 3-torus."""
    S = np.eye(d) if unitary else rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d)
    Si = np.linalg.inv(S)
    mats = {}
    for e in ("x", "y", "z"):
        phase = np.exp(2j * np.pi * rng.uniform(0.05, 0.95, size=d))
        modulus = np.ones(d) if unitary else np.exp(rng.normal(scale=0.3, size=d))
        mats[e] = S @ np.diag(phase * modulus) @ Si
    return LocalSystem.from_matrices(mats)


# --------------------------------------------------------------------------
# twisted complex and torsion
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TwistedComplex:
    """Twisted chain complex; ``boundaries[j - 1]`` is ``C_j -> C_{j-1}``."""

    cw: CWData
    ls: LocalSystem
    dims: tuple[int, ...]
    boundaries: tuple
    exact: bool = False

    @cached_property
    def cochain(self):
        """Degree-reversed cochain complex ``D^j = C_{n-j}``."""
        n = len(self.dims) - 1
        mats = [self.boundaries[n - j - 1] for j in range(n)]
        dims = [self.dims[n - j] for j in range(n + 1)]
        if self.exact:
            K, _ = ex.cyclotomic_field(self.ls.cyclotomic[0])
            return validate_exact_complex(mats, K, dims)
        return validate_complex(mats, dims=dims, tol=1e-9)

    @property
    def is_acyclic(self) -> bool:
        return self.cochain.is_acyclic


def twisted_boundary(cw: CWData, ls: LocalSystem, exact: bool = False, tol: float = 1e-9) -> TwistedComplex:
    """Block boundary ``sum sign * hol(path)^{-T}`` of the dual local system.

    With ``exact=True`` (rank one cyclotomic systems only) the entries are in
    ``Q(zeta_p)`` and ``d^2 = 0`` is checked exactly.
    """
    ls.check(cw, tol)
    d = ls.d
    dims = tuple(d * len(c) for c in cw.cells)
    if exact:
        if ls.cyclotomic is None or d != 1:
            raise ShapeMismatch("exact evaluation needs a cyclotomic rank one system")
        p = ls.cyclotomic[0]
        K, zeta = ex.cyclotomic_field(p)
        powers = [K.one]
        for _ in range(p - 1):
            powers.append(powers[-1] * zeta)
    mats = []
    for j in range(1, cw.n + 1):
        rows, cols = dims[j - 1], dims[j]
        if exact:
            M = [[K.zero] * cols for _ in range(rows)]
            for i, a in enumerate(cw.cells[j]):
                for t in cw.incidence.get(a, ()):
                    r = cw.position(t.face)
                    M[r][i] = M[r][i] + K.convert(t.sign) * powers[(-ls.exponent(t.path)) % p]
            mats.append(ex.matrix(M, K, (rows, cols)))
        else:
            M = np.zeros((rows, cols), dtype=complex)
            for i, a in enumerate(cw.cells[j]):
                for t in cw.incidence.get(a, ()):
                    r = cw.position(t.face)
                    M[r * d:(r + 1) * d, i * d:(i + 1) * d] += t.sign * ls.dual_transport(t.path)
            mats.append(M)
    for j in range(1, len(mats)):
        if exact:
            bad = not ex.is_zero(mats[j - 1] * mats[j]) if dims[j - 1] and dims[j + 1] else False
            if bad:
                raise NotAComplex(f"twisted boundary squares to a nonzero map at degree {j + 1}")
        else:
            P = mats[j - 1] @ mats[j]
            scale = max(1.0, np.abs(mats[j - 1]).max(initial=0) * np.abs(mats[j]).max(initial=0))
            if P.size and np.abs(P).max() > tol * scale:
                raise NotAComplex(f"twisted boundary squares to a nonzero map at degree {j + 1}")
    return TwistedComplex(cw, ls, dims, tuple(mats), exact)


@dataclass(frozen=True)
class Spider:
    """Walks from the base point to the base vertex of every cell."""

    paths: Mapping[str, tuple[Step, ...]]

    def euler_chain(self, cw: CWData) -> "EulerChain":
        z = np.zeros(len(cw.edges), dtype=np.int64)
        for a, path in self.paths.items():
            z += (-1) ** cw.dim_of(a) * cw.chain_of(path)
        return EulerChain.from_vector(cw, z, cw.euler_divisor())


def tree_spider(cw: CWData) -> Spider:
    return Spider({a: cw.tree_path(cw.basepoint, cw.base[a]) for names in cw.cells for a in names})


def reroute(cw: CWData, spider: Spider, cell: str, loop: Sequence[Step]) -> Spider:
    """Prepend a closed walk at the base point to the path of ``cell``."""
    loop = _steps(loop)
    if cw.walk_end(cw.basepoint, loop) != cw.basepoint:
        raise ShapeMismatch("rerouting loop must be closed at the base point")
    paths = dict(spider.paths)
    paths[cell] = _reduce(loop + tuple(paths[cell]))
    return Spider(paths)


def _check_spider(cw: CWData, spider: Spider) -> None:
    for names in cw.cells:
        for a in names:
            if a not in spider.paths:
                raise ShapeMismatch(f"spider has no path to {a!r}")
            if cw.walk_end(cw.basepoint, spider.paths[a]) != cw.base[a]:
                raise ShapeMismatch(f"spider path of {a!r} ends at the wrong vertex")


def _cycle_walk(cw: CWData, z: np.ndarray) -> tuple[Step, ...]:
    """Closed walk at the base point whose chain is the integer cycle ``z``."""
    walk: list[Step] = []
    for e in cw.non_tree_edges:
        c = int(z[cw.position(e)])
        if c == 0:
            continue
        tail, head = cw.ends[e]
        loop = cw.tree_path(cw.basepoint, tail) + ((e, 1),) + cw.tree_path(head, cw.basepoint)
        if c < 0:
            loop = tuple((f, -s) for f, s in reversed(loop))
        walk.extend(loop * abs(c))
    return _reduce(walk)


def spider_for_euler_chain(cw: CWData, e: "EulerChain") -> Spider:
    """A spider whose Euler chain is exactly ``e``.

    The tree spider is modified by a closed walk on the base point cell.
    """
    e.check(cw)
    base = tree_spider(cw)
    h = e.vector(cw) - base.euler_chain(cw).vector(cw)
    spider = reroute(cw, base, cw.basepoint, _cycle_walk(cw, h))
    if np.any(spider.euler_chain(cw).vector(cw) != e.vector(cw)):
        raise BadEulerChain("could not realize the Euler chain by a spider")
    return spider


def _cell_bases(cw: CWData, ls: LocalSystem, spider: Spider, U: np.ndarray) -> list[np.ndarray]:
    n = cw.n
    out = []
    for j in range(n, -1, -1):
        blocks = [ls.dual_transport(spider.paths[a]) @ U for a in cw.cells[j]]
        out.append(sla.block_diag(*blocks) if blocks else np.zeros((0, 0), dtype=complex))
    return out


def turaev_torsion(cw: CWData, ls: LocalSystem, euler: "EulerChain | None" = None,
                   base_basis=None, spider: Spider | None = None, exact: bool = False):
    """Torsion of the twisted complex with bases transported along a spider.

    Parameters
    ----------
    euler : EulerChain, optional
        Realized by :func:`spider_for_euler_chain`; ignored when ``spider`` is given.
    base_basis : (d, d) array, optional
        Basis of the fiber at the base point, identity by default.
    exact : bool
        Evaluate in ``Q(zeta_p)`` for cyclotomic rank one systems; the
        result is then a sympy number.

    Returns
    -------
    complex
    """
    if spider is None:
        spider = spider_for_euler_chain(cw, euler) if euler is not None else tree_spider(cw)
    _check_spider(cw, spider)
    tc = twisted_boundary(cw, ls, exact=exact)
    D = tc.cochain
    if not D.is_acyclic:
        raise NotAcyclic(f"twisted complex has homology {list(D.betti)}")
    if exact:
        if base_basis is not None:
            raise ShapeMismatch("exact evaluation uses the unit base basis")
        p = ls.cyclotomic[0]
        K, zeta = ex.cyclotomic_field(p)
        bases = []
        for j in range(cw.n, -1, -1):
            diag = [zeta ** ((-ls.exponent(spider.paths[a])) % p) for a in cw.cells[j]]
            M = ex.matrix([[diag[i] if i == k else K.zero for k in range(len(diag))] for i in range(len(diag))],
                          K, (len(diag), len(diag)))
            bases.append(M)
        value = refined_torsion_element(D, bases)
        return K.to_sympy(value)
    U = np.eye(ls.d, dtype=complex) if base_basis is None else np.asarray(base_basis, dtype=complex)
    c = DetLineElement(tuple(_cell_bases(cw, ls, spider, U)))
    return complex(refined_torsion_element(D, c))


def lens_torsion_modulus(p: int, q: int, a: int = 1) -> float:
    """``|zeta^a - 1| |zeta^{a qbar} - 1|`` with ``q qbar = 1 mod p``, from the sine formula."""
    qbar = pow(q, -1, p)
    return 4 * abs(np.sin(np.pi * a / p)) * abs(np.sin(np.pi * a * qbar / p))


# --------------------------------------------------------------------------
# Euler chains, Chern-Simons chains, homology
# --------------------------------------------------------------------------


def _as_dict(cw: CWData, z) -> dict[str, int]:
    return {e: int(c) for e, c in zip(cw.edges, z) if c}


@dataclass(frozen=True)
class EulerChain:
    """Integer 1-chain ``chain`` with ``boundary(chain) = divisor``."""

    chain: Mapping[str, int]
    divisor: Mapping[str, int]

    @classmethod
    def from_vector(cls, cw: CWData, z, divisor: Mapping[str, int]) -> "EulerChain":
        e = cls(_as_dict(cw, z), {v: int(c) for v, c in divisor.items() if c})
        e.validate(cw)
        return e

    def vector(self, cw: CWData) -> np.ndarray:
        z = np.zeros(len(cw.edges), dtype=np.int64)
        for e, c in self.chain.items():
            z[cw.position(e)] += c
        return z

    def validate(self, cw: CWData) -> "EulerChain":
        if cw.boundary_of_chain(self.vector(cw)) != {v: c for v, c in self.divisor.items() if c}:
            raise BadEulerChain("boundary of the chain differs from the divisor")
        return self

    def check(self, cw: CWData) -> "EulerChain":
        """Validate and require the divisor of the cell structure."""
        self.validate(cw)
        if {v: c for v, c in self.divisor.items() if c} != cw.euler_divisor():
            raise BadEulerChain("divisor differs from the divisor of the cell structure")
        return self

    def shifted(self, cw: CWData, h) -> "EulerChain":
        h = _cycle_vector(cw, h)
        return EulerChain.from_vector(cw, self.vector(cw) + h, self.divisor)


@dataclass(frozen=True)
class CSChain:
    """Integer 1-chain with ``boundary = end - start``."""

    chain: Mapping[str, int]
    start: Mapping[str, int]
    end: Mapping[str, int]

    def validate(self, cw: CWData) -> "CSChain":
        z = np.zeros(len(cw.edges), dtype=np.int64)
        for e, c in self.chain.items():
            z[cw.position(e)] += c
        target = {v: self.end.get(v, 0) - self.start.get(v, 0) for v in set(self.end) | set(self.start)}
        if cw.boundary_of_chain(z) != {v: c for v, c in target.items() if c}:
            raise EndpointMismatch("boundary differs from end minus start")
        return self


def cs_between(cw: CWData, e0: EulerChain, e1: EulerChain) -> CSChain:
    z = e1.vector(cw) - e0.vector(cw)
    return CSChain(_as_dict(cw, z), dict(e0.divisor), dict(e1.divisor)).validate(cw)


def cs_compose(cw: CWData, a: CSChain, b: CSChain) -> CSChain:
    """``cs(X0, X1) + cs(X1, X2)``; the middle divisors must agree."""
    clean = lambda d: {v: c for v, c in d.items() if c}
    if clean(a.end) != clean(b.start):
        raise EndpointMismatch("end of the first chain differs from the start of the second")
    z = {e: a.chain.get(e, 0) + b.chain.get(e, 0) for e in set(a.chain) | set(b.chain)}
    return CSChain(clean(z), dict(a.start), dict(b.end)).validate(cw)


def _cycle_vector(cw: CWData, z) -> np.ndarray:
    if isinstance(z, Mapping):
        v = np.zeros(len(cw.edges), dtype=np.int64)
        for e, c in z.items():
            v[cw.position(e)] += int(c)
    else:
        v = np.asarray(z, dtype=np.int64).reshape(len(cw.edges))
    if cw.boundary_of_chain(v):
        raise NotACycle("chain has nonzero boundary")
    return v


@dataclass(frozen=True, eq=False)
class H1Group:
    """``H_1 = Z^free_rank + sum Z/t_i`` with cycle representatives of each generator.

    ``coords`` maps non-tree coordinates of a cycle to generator coordinates.
    """

    free_rank: int
    torsion: tuple[int, ...]
    generators: tuple[np.ndarray, ...]
    orders: tuple[int, ...]
    coords: sp.Matrix


def h1_group(cw: CWData) -> H1Group:
    """First integral homology from the Smith form of the 2-cell relations.

    Cycles are coordinatized by their non-tree edge coefficients, which
    identifies ``Z_1`` with ``Z^{#non-tree}``; boundaries of 2-cells give
    the relation matrix.
    """
    rows = [cw.position(e) for e in cw.non_tree_edges]
    k = len(rows)
    B2 = cw.integer_boundary(2) if cw.n >= 2 else np.zeros((len(cw.edges), 0), dtype=np.int64)
    R = sp.Matrix(B2[rows, :].tolist()) if k else sp.zeros(0, B2.shape[1])
    if k == 0:
        return H1Group(0, (), (), (), sp.zeros(0, 0))
    if R.shape[1] == 0:
        S, U, V = sp.zeros(k, 0), sp.eye(k), sp.zeros(0, 0)
    else:
        S, U, V = smith_normal_decomp(R, domain=sp.ZZ)
    diag = [abs(int(S[i, i])) if i < S.shape[1] else 0 for i in range(k)]
    Uinv = U.inv()
    gens, orders = [], []
    for i, dval in enumerate(diag):
        if dval == 1:
            continue
        y = [int(x) for x in Uinv[:, i]]
        gens.append(_cycle_from_nontree(cw, y))
        orders.append(dval)
    keep = [i for i, dval in enumerate(diag) if dval != 1]
    coords = U.extract(keep, list(range(k)))
    return H1Group(sum(1 for o in orders if o == 0), tuple(o for o in orders if o > 1),
                   tuple(gens), tuple(orders), coords)


def _cycle_from_nontree(cw: CWData, y: Sequence[int]) -> np.ndarray:
    z = np.zeros(len(cw.edges), dtype=np.int64)
    for e, c in zip(cw.non_tree_edges, y):
        tail, head = cw.ends[e]
        loop = cw.tree_path(cw.basepoint, tail) + ((e, 1),) + cw.tree_path(head, cw.basepoint)
        z += int(c) * cw.chain_of(loop)
    return z


def h1_class(cw: CWData, z, group: H1Group | None = None) -> tuple[int, ...]:
    """Coordinates of a cycle on the generators of :func:`h1_group` (torsion parts reduced)."""
    v = _cycle_vector(cw, z)
    g = group or h1_group(cw)
    if not g.orders:
        return ()
    y = sp.Matrix([int(v[cw.position(e)]) for e in cw.non_tree_edges])
    c = g.coords * y
    return tuple(int(c[i]) % o if o else int(c[i]) for i, o in enumerate(g.orders))


def pair_det_rep(cw: CWData, ls: LocalSystem, z) -> complex:
    """``<det rho, z> = prod_e det(H_e)^{z_e}`` for an integer 1-cycle ``z``."""
    v = _cycle_vector(cw, z)
    out = 1.0 + 0j
    for e, c in zip(cw.edges, v):
        if c:
            out *= complex(np.linalg.det(ls.holonomy[e])) ** int(c)
    return out


def euler_transform_check(cw: CWData, ls: LocalSystem, e: EulerChain, h):
    """``(tau_{e+h}, tau_e, <det rho, h>)``, each computed independently."""
    shifted = e.shifted(cw, h)
    return (turaev_torsion(cw, ls, shifted), turaev_torsion(cw, ls, e), pair_det_rep(cw, ls, h))


# --------------------------------------------------------------------------
# standard cell structures
# --------------------------------------------------------------------------


def _edge_terms(tail: str, head: str, e: str) -> tuple[Incidence, ...]:
    return (Incidence(head, 1, ((e, 1),)), Incidence(tail, -1, ()))


def circle() -> CWData:
    """One vertex ``x`` and one loop ``t``."""
    return CWData((("x",), ("t",)), {"t": _edge_terms("x", "x", "t")}, {"x": "x", "t": "x"},
                  {}, (), "x", "circle").validate()


def subdivided_circle(m: int) -> CWData:
    """Vertices ``v0 .. v{m-1}`` and edges ``e_i : v_i -> v_{i+1}``; the tree omits the last edge."""
    if m < 1:
        raise ShapeMismatch("need at least one vertex")
    vs = tuple(f"v{i}" for i in range(m))
    es = tuple(f"e{i}" for i in range(m))
    inc = {es[i]: _edge_terms(vs[i], vs[(i + 1) % m], es[i]) for i in range(m)}
    base = {v: v for v in vs} | {es[i]: vs[i] for i in range(m)}
    return CWData((vs, es), inc, base, {}, es[:-1], "v0", f"circle[{m}]").validate()


def lens_space(p: int, q: int) -> CWData:
    """Standard cell structure of ``L(p, q)`` with one cell per dimension.

    ``d e1 = (t - 1) x``, ``d e2 = (1 + t + ... + t^{p-1}) e1`` and
    ``d e3 = (t^{qbar} - 1) e2`` with ``q qbar = 1 mod p``.
    """
    if p < 2 or np.gcd(p, q) != 1:
        raise ShapeMismatch("lens spaces need p >= 2 and gcd(p, q) = 1")
    qbar = pow(q, -1, p)
    t = ("t", 1)
    inc = {
        "t": _edge_terms("x", "x", "t"),
        "D": tuple(Incidence("t", 1, (t,) * i) for i in range(p)),
        "B": (Incidence("D", 1, (t,) * qbar), Incidence("D", -1, ())),
    }
    base = {"x": "x", "t": "x", "D": "x", "B": "x"}
    return CWData((("x",), ("t",), ("D",), ("B",)), inc, base, {"D": (t,) * p}, (), "x",
                  f"L({p},{q})").validate()


def three_torus() -> CWData:
    """Product cell structure of the 3-torus with one vertex and loops ``x, y, z``."""
    X, Y, Z = ("x", 1), ("y", 1), ("z", 1)
    inc = {
        "x": _edge_terms("v", "v", "x"),
        "y": _edge_terms("v", "v", "y"),
        "z": _edge_terms("v", "v", "z"),
        "xy": (Incidence("x", 1, ()), Incidence("x", -1, (Y,)), Incidence("y", 1, (X,)), Incidence("y", -1, ())),
        "xz": (Incidence("x", 1, ()), Incidence("x", -1, (Z,)), Incidence("z", 1, (X,)), Incidence("z", -1, ())),
        "yz": (Incidence("y", 1, ()), Incidence("y", -1, (Z,)), Incidence("z", 1, (Y,)), Incidence("z", -1, ())),
        "xyz": (Incidence("xy", 1, ()), Incidence("xy", -1, (Z,)), Incidence("xz", 1, (Y,)),
                Incidence("xz", -1, ()), Incidence("yz", 1, ()), Incidence("yz", -1, (X,))),
    }
    cells = (("v",), ("x", "y", "z"), ("xy", "xz", "yz"), ("xyz",))
    base = {a: "v" for names in cells for a in names}
    att = {
        "xy": (X, Y, ("x", -1), ("y", -1)),
        "xz": (X, Z, ("x", -1), ("z", -1)),
        "yz": (Y, Z, ("y", -1), ("z", -1)),
    }
    return CWData(cells, inc, base, att, (), "v", "T^3").validate()
