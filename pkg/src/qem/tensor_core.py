"""Dense frame-component tensors and the algebraic kernels built on them.

Every tensor lives in a declared-orthonormal frame, so raising and lowering
indices is the identity and contractions are plain index sums.  Arrays are
stored read-only; the containers are immutable once constructed.

Conventions
-----------
* ``SymTensor2.components[i, j]`` is ``s(E_i, E_j)``.
* ``CurvTensor4.components[x, y, z, w]`` is ``T(E_x, E_y, E_z, E_w)``; for the
  Riemann tensor ``R(X, Y, Y, X)`` is the sectional curvature of the plane
  ``X ^ Y`` (times its area squared).
* ``Spectrum.eigenframe[:, k]`` is the unit eigenvector for
  ``Spectrum.eigenvalues[k]`` (column convention, as in numpy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

MAX_DIM = 16
DEFAULT_RTOL = 1e-10
BIANCHI_RTOL = 1e-12
# Eigenvalues closer than this (relative to 1 + spectral radius) share an eigenspace.
EIGEN_TIE_RTOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_dim(n: int) -> None:
    if not 1 <= n <= MAX_DIM:
        raise InputError(f"frame dimension must be in 1..{MAX_DIM}, got {n}")


def scale_of(*arrays) -> float:
    """``1 + max |entry|`` over the given arrays; the yardstick for relative tolerances."""
    m = 0.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            m = max(m, float(np.max(np.abs(a))))
    return 1.0 + m


def sup_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_vector(v, n: int | None = None) -> np.ndarray:
    """Validate a frame coefficient vector (``Vec_n``) and return it read-only."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"expected a non-empty 1-d coefficient vector, got shape {arr.shape}")
    if n is not None and arr.size != n:
        raise InputError(f"vector has length {arr.size}, frame dimension is {n}")
    _check_dim(arr.size)
    if not np.all(np.isfinite(arr)):
        raise InputError("vector has non-finite components")
    return _readonly(arr)


@dataclass(frozen=True, eq=False)
class SymTensor2:
    """Symmetric (0,2)-tensor in an orthonormal frame.

    Construction symmetrizes the input exactly; inputs whose asymmetry exceeds
    ``DEFAULT_RTOL`` relative to their size are rejected.
    """

    components: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.components, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"SymTensor2 needs a square matrix, got shape {a.shape}")
        _check_dim(a.shape[0])
        if not np.all(np.isfinite(a)):
            raise InputError("SymTensor2 has non-finite components")
        if sup_norm(a - a.T) > DEFAULT_RTOL * scale_of(a):
            raise InputError("SymTensor2 input is not symmetric")
        object.__setattr__(self, "components", _readonly(0.5 * (a + a.T)))

    @classmethod
    def identity(cls, n: int) -> "SymTensor2":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymTensor2":
        return cls(np.zeros((n, n)))

    @classmethod
    def diag(cls, values) -> "SymTensor2":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.components))

    def norm_squared(self) -> float:
        """``|S|^2 = sum_ij S_ij^2`` (frame is orthonormal)."""
        return float(np.sum(self.components**2))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)

    def __add__(self, other):
        return SymTensor2(self.components + np.asarray(other))

    def __sub__(self, other):
        return SymTensor2(self.components - np.asarray(other))

    def __mul__(self, c):
        return SymTensor2(float(c) * self.components)

    __rmul__ = __mul__


def symmetry_residuals(t) -> tuple[float, float, float]:
    """Sup-norm defects of (1,2)-antisymmetry, (3,4)-antisymmetry and pair symmetry."""
    a = np.asarray(t, dtype=float)
    return (
        sup_norm(a + a.transpose(1, 0, 2, 3)),
        sup_norm(a + a.transpose(0, 1, 3, 2)),
        sup_norm(a - a.transpose(2, 3, 0, 1)),
    )


def bianchi_residual(t) -> float:
    """Sup-norm of ``T(x,y,z,w) + T(y,z,x,w) + T(z,x,y,w)``."""
    a = np.asarray(t, dtype=float)
    return sup_norm(a + a.transpose(1, 2, 0, 3) + a.transpose(2, 0, 1, 3))


@dataclass(frozen=True, eq=False)
class CurvTensor4:
    """(0,4)-tensor with the algebraic symmetries of a curvature tensor.

    ``riemann_type=True`` additionally enforces the first Bianchi identity to
    ``BIANCHI_RTOL`` relative to the size of the components.
    """

    components: np.ndarray
    riemann_type: bool = False

    def __post_init__(self):
        a = np.asarray(self.components, dtype=float)
        if a.ndim != 4 or len(set(a.shape)) != 1:
            raise InputError(f"CurvTensor4 needs an n x n x n x n array, got shape {a.shape}")
        _check_dim(a.shape[0])
        if not np.all(np.isfinite(a)):
            raise InputError("CurvTensor4 has non-finite components")
        tol = DEFAULT_RTOL * scale_of(a)
        anti12, anti34, pair = symmetry_residuals(a)
        if max(anti12, anti34, pair) > tol:
            raise InputError(
                f"CurvTensor4 symmetry violated (anti12={anti12:.3g}, anti34={anti34:.3g}, pair={pair:.3g})"
            )
        if self.riemann_type and bianchi_residual(a) > BIANCHI_RTOL * scale_of(a):
            raise InputError(f"first Bianchi identity violated ({bianchi_residual(a):.3g})")
        object.__setattr__(self, "components", _readonly(a))

    @classmethod
    def zeros(cls, n: int) -> "CurvTensor4":
        return cls(np.zeros((n, n, n, n)))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)

    def __add__(self, other):
        return CurvTensor4(self.components + np.asarray(other))

    def __sub__(self, other):
        return CurvTensor4(self.components - np.asarray(other))

    def __mul__(self, c):
        return CurvTensor4(float(c) * self.components, self.riemann_type)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenframe: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenframe", _readonly(self.eigenframe))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def vectors(self) -> list[np.ndarray]:
        return [self.eigenframe[:, k] for k in range(self.dim)]

    def eigenspace(self, value: float, atol: float) -> list[np.ndarray]:
        """Eigenvectors whose eigenvalue lies within ``atol`` of ``value``."""
        return [self.eigenframe[:, k] for k in range(self.dim) if abs(self.eigenvalues[k] - value) <= atol]


def kulkarni_nomizu(s, r) -> CurvTensor4:
    """Kulkarni-Nomizu product with the halved convention.

    ``(s o r)(X,Y,Z,W) = 1/2 (r(X,W) s(Y,Z) + r(Y,Z) s(X,W))
                       - 1/2 (r(X,Z) s(Y,W) + r(Y,W) s(X,Z))``,

    so that ``(g o g)(X,Y,Y,X) = 1`` for orthonormal ``X, Y``.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if s.shape != r.shape:
        raise InputError(f"Kulkarni-Nomizu factors differ in shape: {s.shape} vs {r.shape}")
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 2:
        raise InputError(f"Kulkarni-Nomizu product needs n x n factors with n >= 2, got {s.shape}")
    t = 0.5 * (np.einsum("xw,yz->xyzw", r, s) + np.einsum("yz,xw->xyzw", r, s))
    t -= 0.5 * (np.einsum("xz,yw->xyzw", r, s) + np.einsum("yw,xz->xyzw", r, s))
    return CurvTensor4(t)


def ricci_contraction(t) -> SymTensor2:
    """``out(X, Y) = sum_i T(X, E_i, E_i, Y)``."""
    return SymTensor2(np.einsum("xiiy->xy", np.asarray(t, dtype=float)))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > 1e-12:
            return v if x > 0 else -v
    return v


def _canonical_eigenspace(basis: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(basis columns).

    Projects the standard basis vectors onto the subspace in index order and
    Gram-Schmidts them, so the result does not depend on LAPACK's choice
    inside a degenerate eigenspace.
    """
    n, k = basis.shape
    proj = basis @ basis.T
    out: list[np.ndarray] = []
    for i in range(n):
        v = proj[:, i].copy()
        for u in out:
            v -= (u @ v) * u
        # second pass keeps the frame orthonormal to machine precision
        for u in out:
            v -= (u @ v) * u
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            out.append(v / nv)
        if len(out) == k:
            break
    return np.column_stack(out)


def sym_eigen(s) -> Spectrum:
    """Eigen-decomposition of a symmetric tensor with deterministic output.

    Eigenvalues ascend; inside a (numerically) repeated eigenvalue the frame is
    the canonical Gram-Schmidt basis described in :func:`_canonical_eigenspace`,
    and every eigenvector has its first non-negligible component positive.
    """
    a = np.asarray(s, dtype=float)
    if not isinstance(s, SymTensor2):
        a = SymTensor2(a).components
    w, v = np.linalg.eigh(a)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    tie = EIGEN_TIE_RTOL * scale_of(w)
    frame = np.empty_like(v)
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= tie:
            stop += 1
        block = v[:, start:stop]
        if stop - start > 1:
            block = _canonical_eigenspace(block)
        for k in range(block.shape[1]):
            frame[:, start + k] = _canonical_sign(block[:, k])
        start = stop
    return Spectrum(w, frame)


def q_trace_check(q, p, n: int, m: float) -> float:
    """Defect of ``sum_i Q(X, E_i, E_i, Y) = (n+m-2)/m P(X, Y)`` in sup norm."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape[0] != n or p.shape != (n, n):
        raise InputError(f"q_trace_check: tensors are not {n}-dimensional")
    lhs = np.einsum("xiiy->xy", q)
    return sup_norm(lhs - (n + m - 2.0) / m * p)
