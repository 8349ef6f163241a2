"""Exact linear algebra over number fields (Gaussian rationals, cyclotomic fields).

Thin helpers around :class:`sympy.polys.matrices.DomainMatrix` so that the
torsion routines can run without rounding on small symbolic instances.
"""
from __future__ import annotations

from functools import lru_cache

import sympy as sp
from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

__all__ = [
    "QQ_I",
    "cyclotomic_field",
    "exact_scalar",
    "matrix",
    "zeros",
    "eye",
    "hstack",
    "block_diag",
    "pivot_columns",
    "rank",
    "det",
    "is_zero",
    "to_complex",
]


@lru_cache(maxsize=None)
def cyclotomic_field(p: int):
    """Return ``(K, zeta)`` with ``K = Q(exp(2 pi i / p))`` and ``zeta`` its generator."""
    z = sp.exp(2 * sp.pi * sp.I / p)
    K = sp.QQ.algebraic_field(z)
    return K, K.from_sympy(z)


def exact_scalar(x) -> sp.Expr:
    """Convert a Python/numpy number to an exact sympy number.

    Floats are converted to the binary rational they represent, so no
    information is lost or invented.
    """
    if isinstance(x, sp.Basic):
        return x
    c = complex(x)
    return sp.Rational(c.real) + sp.I * sp.Rational(c.imag)


def matrix(rows, K, shape=None) -> DomainMatrix:
    """Build a DomainMatrix over ``K`` from nested rows of numbers or domain elements."""
    rows = [list(r) for r in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    conv = []
    for r in rows:
        out = []
        for x in r:
            if K.of_type(x):
                out.append(x)
            else:
                out.append(K.from_sympy(exact_scalar(x)))
        conv.append(out)
    if shape[0] == 0 or shape[1] == 0:
        return DomainMatrix.zeros(shape, K)
    return DomainMatrix(conv, shape, K)


def zeros(m: int, n: int, K) -> DomainMatrix:
    return DomainMatrix.zeros((m, n), K)


def eye(n: int, K) -> DomainMatrix:
    return DomainMatrix.eye(n, K)


def hstack(blocks, K, nrows: int) -> DomainMatrix:
    blocks = [b for b in blocks if b.shape[1] > 0]
    if not blocks:
        return zeros(nrows, 0, K)
    out = blocks[0]
    for b in blocks[1:]:
        out = out.hstack(b)
    return out


def block_diag(a: DomainMatrix, b: DomainMatrix) -> DomainMatrix:
    K = a.domain
    (m1, n1), (m2, n2) = a.shape, b.shape
    rows = [[K.zero] * (n1 + n2) for _ in range(m1 + m2)]
    for i, row in enumerate(a.to_list() if m1 and n1 else []):
        rows[i][:n1] = row
    for i, row in enumerate(b.to_list() if m2 and n2 else []):
        rows[m1 + i][n1:] = row
    return matrix(rows, K, (m1 + m2, n1 + n2))


def pivot_columns(M: DomainMatrix) -> list[int]:
    if M.shape[0] == 0 or M.shape[1] == 0:
        return []
    _, piv = M.rref()
    return list(piv)


def rank(M: DomainMatrix) -> int:
    return len(pivot_columns(M))


def det(M: DomainMatrix):
    K = M.domain
    if M.shape[0] == 0:
        return K.one
    return M.det()


def is_zero(M: DomainMatrix) -> bool:
    if M.shape[0] == 0 or M.shape[1] == 0:
        return True
    return M.is_zero_matrix


def to_complex(K, x) -> complex:
    return complex(sp.N(K.to_sympy(x), 30))
