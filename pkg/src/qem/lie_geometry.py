"""Curvature of left-invariant metrics from structure constants.

A :class:`LieAlgebraMetric` stores ``C[i, j, k] = g([X_i, X_j], X_k)`` in an
orthonormal frame of left-invariant fields.  Because every quantity below is
left-invariant, covariant derivatives reduce to algebra in ``C``.

Note on the Levi-Civita coefficients: Koszul's formula gives
``g(nabla_{X_2} X_0, X_2) = -F_22`` and ``g(nabla_{X_2} X_0, X_3) = -(F_23 + F_32)/2``
when ``[X_0, X_i] = F_ij X_j``.  A closely related closed form that circulates
for the same family, ``nabla_{X_2} X_0 = (2 - 3a + a^2 + b^2) - b z X_3``, drops
the factor ``z X_2`` on its first term; this module only ever uses the
Koszul values.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .tensor_core import (
    CurvTensor4,
    SymTensor2,
    _readonly,
    as_vector,
    ricci_contraction,
    scale_of,
    sup_norm,
)

JACOBI_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LieAlgebraMetric:
    """Lie algebra with brackets written in a declared-orthonormal frame."""

    C: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.C, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise InputError(f"structure constants must be n x n x n, got shape {c.shape}")
        if not 1 <= c.shape[0] <= 16:
            raise InputError(f"algebra dimension must be in 1..16, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants contain non-finite values")
        if not np.array_equal(c, -c.transpose(1, 0, 2)):
            raise InputError("structure constants are not antisymmetric in the first two slots")
        object.__setattr__(self, "C", _readonly(c))

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    @classmethod
    def from_triples(cls, dim: int, triples: Iterable[Sequence]) -> "LieAlgebraMetric":
        """Build from ``(i, j, k, value)`` entries meaning ``g([X_i, X_j], X_k) = value``.

        Indices are 0-based, omitted entries are zero and the antisymmetric
        partner ``(j, i, k)`` is filled in.  Giving both partners is allowed
        only if they agree.
        """
        c = np.zeros((dim, dim, dim))
        seen: dict[tuple[int, int, int], float] = {}
        for entry in triples:
            if len(entry) != 4:
                raise InputError(f"structure constant entry must be (i, j, k, value), got {entry!r}")
            i, j, k, val = entry
            for idx in (i, j, k):
                if not isinstance(idx, (int, np.integer)) or not 0 <= idx < dim:
                    raise InputError(f"index {idx!r} out of range for dimension {dim}")
            val = float(val)
            if i == j:
                if val != 0.0:
                    raise InputError(f"[X_{i}, X_{i}] must vanish, got component {val}")
                continue
            for key, v in (((i, j, k), val), ((j, i, k), -val)):
                if key in seen and seen[key] != v:
                    raise InputError(f"conflicting entries for bracket component {key}")
                seen[key] = v
                c[key] = v
        return cls(c)

    @classmethod
    def from_brackets(cls, dim: int, brackets: dict) -> "LieAlgebraMetric":
        """Build from ``{(i, j): coefficient vector of [X_i, X_j]}``."""
        c = np.zeros((dim, dim, dim))
        for (i, j), vec in brackets.items():
            vec = as_vector(vec, dim)
            c[i, j] = vec
            c[j, i] = -vec
        return cls(c)

    def bracket(self, u, v) -> np.ndarray:
        """Coefficients of ``[u, v]`` for frame-coefficient vectors ``u, v``."""
        return np.einsum("i,j,ijk->k", as_vector(u, self.dim), as_vector(v, self.dim), self.C)

    def ad(self, i: int) -> np.ndarray:
        """Matrix of ``ad_{X_i}`` acting on column vectors: ``ad[k, j] = g([X_i, X_j], X_k)``."""
        return self.C[i].T.copy()

    def _memo(self, key, fn):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = fn()
            return self._cache[key]


@dataclass(frozen=True, eq=False)
class ConnectionCoeffs:
    """``gamma[i, j, k] = g(nabla_{X_i} X_j, X_k)``."""

    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", _readonly(self.gamma))


@dataclass(frozen=True, eq=False)
class CurvatureData:
    R: CurvTensor4
    Ric: SymTensor2
    scal: float


@dataclass(frozen=True, eq=False)
class SolitonData:
    """Candidate algebraic soliton ``Ric = c I + D``.

    ``D`` is an endomorphism in column convention: ``D X_j = sum_i D[i, j] X_i``.
    """

    c: float
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "D", _readonly(self.D))


def jacobi_residual(L: LieAlgebraMetric) -> float:
    """Largest sup-norm of the Jacobi sum over frame triples."""
    c = L.C
    jac = (
        np.einsum("ijl,lkm->ijkm", c, c)
        + np.einsum("jkl,lim->ijkm", c, c)
        + np.einsum("kil,ljm->ijkm", c, c)
    )
    return sup_norm(jac)


def _admit(L: LieAlgebraMetric) -> None:
    res = jacobi_residual(L)
    if res > JACOBI_TOL:
        raise InputError(f"structure constants fail the Jacobi identity (residual {res:.3g})")


def _koszul(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c - np.einsum("jki->ijk", c) + np.einsum("kij->ijk", c))


def _riemann(c: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    # R(X_a, X_b) X_c = nabla_a nabla_b X_c - nabla_b nabla_a X_c - nabla_[a,b] X_c
    return (
        np.einsum("bck,akl->abcl", gamma, gamma)
        - np.einsum("ack,bkl->abcl", gamma, gamma)
        - np.einsum("abk,kcl->abcl", c, gamma)
    )


def levi_civita(L: LieAlgebraMetric) -> ConnectionCoeffs:
    """Koszul formula for left-invariant fields:
    ``gamma[i, j, k] = (C[i, j, k] - C[j, k, i] + C[k, i, j]) / 2``."""
    _admit(L)
    return L._memo("gamma", lambda: ConnectionCoeffs(_koszul(L.C)))


def curvature(L: LieAlgebraMetric) -> CurvatureData:
    gamma = levi_civita(L).gamma

    def compute():
        R = CurvTensor4(_riemann(L.C, gamma), riemann_type=True)
        ric = ricci_contraction(R)
        return CurvatureData(R=R, Ric=ric, scal=ric.trace())

    return L._memo("curvature", compute)


def raw_ricci(L: LieAlgebraMetric) -> np.ndarray:
    """Ricci contraction of the Koszul curvature *without* Jacobi admission.

    Diagnostic only: for brackets that are not a Lie algebra the result is
    not the curvature of any metric and need not be symmetric.
    """
    c = L.C
    return np.einsum("xiiy->xy", _riemann(c, _koszul(c)))


def unimodularity_defect(L: LieAlgebraMetric) -> float:
    """``max_Z |tr ad_Z|`` over frame vectors."""
    traces = np.einsum("ijj->i", L.C)
    return float(np.max(np.abs(traces)))


def derivation_residual(L: LieAlgebraMetric, D) -> float:
    """``max_ij |D[X_i, X_j] - [D X_i, X_j] - [X_i, D X_j]|``."""
    D = np.asarray(D, dtype=float)
    n = L.dim
    if D.shape != (n, n):
        raise InputError(f"derivation must be {n} x {n}, got {D.shape}")
    c = L.C
    # columns of D are images of frame vectors: (D X_i)_k = D[k, i]
    d_of_bracket = np.einsum("ijl,kl->ijk", c, D)
    left = np.einsum("li,ljk->ijk", D, c)
    right = np.einsum("lj,ilk->ijk", D, c)
    return sup_norm(d_of_bracket - left - right)


def antisymmetric_part_norm(D) -> float:
    D = np.asarray(D, dtype=float)
    return sup_norm(0.5 * (D - D.T))


def solvsoliton_residual(L: LieAlgebraMetric, s: SolitonData, tol: float = 1e-12) -> float:
    """``||Ric - c I - sym(D)||_inf``.

    Rejects ``D`` that is not a derivation (residual above ``tol`` relative
    to the size of ``D``).  The antisymmetric part of ``D`` is reported
    separately by :func:`antisymmetric_part_norm`.
    """
    dres = derivation_residual(L, s.D)
    if dres > tol * scale_of(s.D):
        raise InputError(f"D is not a derivation (residual {dres:.3g})")
    ric = curvature(L).Ric.components
    sym_d = 0.5 * (s.D + s.D.T)
    return sup_norm(ric - s.c * np.eye(L.dim) - sym_d)


def gram_schmidt(vectors: Sequence, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize, returning the basis as columns.  Dependent input is an error."""
    out: list[np.ndarray] = []
    for v in vectors:
        v = np.array(v, dtype=float)
        base = np.linalg.norm(v)
        for _ in range(2):
            for u in out:
                v -= (u @ v) * u
        nv = np.linalg.norm(v)
        if base == 0.0 or nv <= tol * base:
            raise InputError("basis vectors are linearly dependent")
        out.append(v / nv)
    return np.column_stack(out)


def distribution_integrability(L: LieAlgebraMetric, basis: Sequence) -> float:
    """Largest component of ``[u, v]`` orthogonal to ``span(basis)`` over basis pairs."""
    if len(basis) == 0:
        raise InputError("distribution basis is empty")
    vecs = [as_vector(v, L.dim) for v in basis]
    q = gram_schmidt(vecs)
    worst = 0.0
    for a in range(len(vecs)):
        for b in range(a + 1, len(vecs)):
            w = L.bracket(vecs[a], vecs[b])
            perp = w - q @ (q.T @ w)
            worst = max(worst, float(np.linalg.norm(perp)))
    return worst


def covariant_derivative_sym2(L: LieAlgebraMetric, gamma, S) -> np.ndarray:
    """``out[i, j, k] = (nabla_{X_i} S)(X_j, X_k)`` for a left-invariant symmetric ``S``."""
    if gamma is None:
        gamma = levi_civita(L)
    g = gamma.gamma if isinstance(gamma, ConnectionCoeffs) else np.asarray(gamma, dtype=float)
    s = np.asarray(S, dtype=float)
    if s.shape != (L.dim, L.dim):
        raise InputError(f"tensor must be {L.dim} x {L.dim}")
    return -np.einsum("ijl,lk->ijk", g, s) - np.einsum("ikl,jl->ijk", g, s)
