"""Exterior algebra of a contact vector space ``T* = V* + C theta``.

``V*`` has basis ``e_0 .. e_{2r-1}`` and symplectic form
``dtheta = sum_i e_{2i} ^ e_{2i+1}``.  Forms of degree ``k`` on ``V*`` use the
lexicographically ordered ``k``-subsets as basis.  Degree ``k`` forms on
``T*`` are stored as ``[f ; g]`` meaning ``f ^ theta + g`` with
``f`` in ``Lambda^{k-1} V*`` and ``g`` in ``Lambda^k V*``.

Every matrix here has exact rational entries (sympy); float copies are
produced on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
import sympy as sp

__all__ = [
    "ContactExterior",
    "wedge_matrix",
    "lefschetz_chirality_blocks",
    "chirality_theta",
]


def _basis(m: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(m), k))


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Sign of the permutation sorting ``a + b``, or 0 if they overlap."""
    if set(a) & set(b):
        return 0
    inversions = sum(1 for x in a for y in b if x > y)
    return -1 if inversions % 2 else 1


def wedge_matrix(m: int, form: dict[tuple[int, ...], int], k: int) -> sp.Matrix:
    """Matrix of ``omega -> form ^ omega`` from ``Lambda^k`` to ``Lambda^{k+p}``.

    ``form`` maps sorted index tuples of length ``p`` to coefficients.
    The form is placed on the left, which for even ``p`` is immaterial.
    """
    p = len(next(iter(form))) if form else 0
    src = _basis(m, k)
    dst = _basis(m, k + p)
    index = {s: i for i, s in enumerate(dst)}
    M = sp.zeros(len(dst), len(src))
    for j, s in enumerate(src):
        for f, coef in form.items():
            sign = _merge_sign(f, s)
            if sign == 0:
                continue
            M[index[tuple(sorted(f + s))], j] += sign * coef
    return M


def _matrix_power_chain(blocks: list, start: int, power: int, dims: list[int]):
    M = sp.eye(dims[start])
    for i in range(power):
        M = blocks[start + 2 * i] * M
    return M


def lefschetz_chirality_blocks(dims0: list[int], lef: list, r: int, exact: bool = True) -> list:
    """Chirality blocks on ``C^k = C_0^{k-1} theta + C_0^k`` from Lefschetz blocks.

    For ``k <= r``: ``g -> L^{r-k} g`` lands in the ``theta`` part of degree
    ``n-k`` and ``f theta -> L^{r-k+1} f`` in the plain part.  Blocks with
    ``k > r`` are the inverses.

    ``lef[j] : C_0^j -> C_0^{j+2}``.  With ``exact=True`` the inputs are sympy
    matrices; otherwise numpy arrays.
    """
    n = 2 * r + 1

    def d0(k):
        return dims0[k] if 0 <= k <= 2 * r else 0

    dims = [d0(k - 1) + d0(k) for k in range(n + 1)]
    if exact:
        zeros, eye = sp.zeros, sp.eye
        power = _matrix_power_chain
        inv = lambda M: M.inv() if M.shape[0] else M
    else:
        zeros = lambda a, b: np.zeros((a, b), dtype=complex)
        eye = lambda a: np.eye(a, dtype=complex)

        def power(blocks, start, p, ds):
            M = eye(ds[start])
            for i in range(p):
                M = blocks[start + 2 * i] @ M
            return M

        inv = lambda M: np.linalg.inv(M) if M.shape[0] else M.copy()
    blocks = [None] * (n + 1)
    for k in range(r + 1):
        M = zeros(dims[n - k], dims[k])
        a = d0(k - 1)
        if d0(k):
            # g in C_0^k  ->  (L^{r-k} g) theta, the theta part of C^{n-k}
            M[: d0(2 * r - k), a:] = power(lef, k, r - k, dims0)
        if a:
            # f theta with f in C_0^{k-1}  ->  L^{r-k+1} f in C_0^{2r-k+1}
            M[d0(2 * r - k):, :a] = power(lef, k - 1, r - k + 1, dims0)
        blocks[k] = M
        blocks[n - k] = inv(M)
    return blocks


@dataclass(frozen=True)
class ContactExterior:
    """Exterior algebra data for a contact vector space of dimension ``2r+1``."""

    r: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be non-negative")

    @property
    def n(self) -> int:
        return 2 * self.r + 1

    @property
    def symplectic_form(self) -> dict[tuple[int, ...], int]:
        return {(2 * i, 2 * i + 1): 1 for i in range(self.r)}

    def horizontal_basis(self, k: int) -> list[tuple[int, ...]]:
        """Lexicographic basis of ``Lambda^k V*``."""
        return _basis(2 * self.r, k)

    def horizontal_dims(self) -> list[int]:
        return [comb(2 * self.r, k) for k in range(2 * self.r + 1)]

    def dims(self) -> list[int]:
        """``dim Lambda^k T*`` for ``k = 0 .. n``."""
        h = self.horizontal_dims()
        return [(h[k - 1] if k >= 1 else 0) + (h[k] if k <= 2 * self.r else 0) for k in range(self.n + 1)]

    @cached_property
    def lefschetz(self) -> list[sp.Matrix]:
        """Blocks of ``L = dtheta ^ . : Lambda^k V* -> Lambda^{k+2} V*``."""
        m = 2 * self.r
        if self.r == 0:
            return []
        return [wedge_matrix(m, self.symplectic_form, k) for k in range(m - 1)]

    def lefschetz_power(self, k: int, p: int) -> sp.Matrix:
        return _matrix_power_chain(self.lefschetz, k, p, self.horizontal_dims())

    def volume_coefficient(self) -> int:
        """Coefficient of ``dtheta^r ^ theta`` on the top basis form (``r!``)."""
        top = self.lefschetz_power(0, self.r)
        return int(top[0, 0]) if top.shape[0] else 1

    @cached_property
    def chirality_exact(self) -> list[sp.Matrix]:
        """Exact blocks of the contact chirality ``Lambda^k T* -> Lambda^{n-k} T*``."""
        return lefschetz_chirality_blocks(self.horizontal_dims(), self.lefschetz, self.r, exact=True)

    def basis_labels(self, k: int) -> list[str]:
        """Human readable labels, ``theta`` written last."""
        def name(idx):
            return "^".join(f"e{i}" for i in idx) if idx else "1"

        out = [f"{name(s)}^theta" if s else "theta" for s in self.horizontal_basis(k - 1)] if k >= 1 else []
        if k <= 2 * self.r:
            out += [name(s) for s in self.horizontal_basis(k)]
        return out


def chirality_theta(ce: ContactExterior):
    """Contact chirality as a float :class:`~torsion.complex_core.ChiralityOperator`."""
    from .complex_core import ChiralityOperator

    blocks = [np.array(B.tolist(), dtype=complex).reshape(B.shape) for B in ce.chirality_exact]
    return ChiralityOperator(tuple(blocks))
