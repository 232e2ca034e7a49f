"""Cohomogeneity-one models ``g = dr^2 + phi(r)^2 g_N`` with closed-form profiles.

Frames are ordered ``[d/dr, E_1 .. E_f, F_1 .. F_d]``: the radial direction,
``f = fiber_dim`` unit fiber directions and ``d = factor_dim`` directions of an
optional Riemannian product factor (used to assemble the split rigid models
``M_1 x M_2`` with ``M_1`` Einstein and carrying constant ``w``).

Fibers and factors enter only through their Einstein constants.  When the
full curvature tensor is needed they are taken to be space forms of that
Ricci curvature, which is what the classical rigid models use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError
from .tensor_core import CurvTensor4, SymTensor2

PROFILE_KINDS = ("constant", "linear", "exp", "sin", "cos", "sinh", "cosh")

# Boundary rows are sampled strictly inside the interval.
BOUNDARY_OFFSET = 1e-3
# Length of the sampling window on unbounded intervals.
UNBOUNDED_WINDOW = 3.0


@dataclass(frozen=True)
class ProfileFunction:
    """``value(r) = amplitude * kind(frequency * r)``.

    ``linear`` means ``amplitude * frequency * r`` and ``constant`` ignores the
    frequency.
    """

    kind: str
    amplitude: float = 1.0
    frequency: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InputError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        for name in ("amplitude", "frequency"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"profile {name} must be finite")

    def derivative(self, r: float, order: int) -> float:
        """Exact ``order``-th derivative of the closed form at ``r``."""
        a, s, k = self.amplitude, self.frequency, self.kind
        x = s * r
        if k == "constant":
            return a if order == 0 else 0.0
        if k == "linear":
            return a * x if order == 0 else (a * s if order == 1 else 0.0)
        # s**order * (a * f(x)) keeps value'' == (+-s^2) * value bit-exact
        if k == "exp":
            base = a * math.exp(x)
        elif k in ("sin", "cos"):
            # sin -> cos -> -sin -> -cos -> sin, cos is sin shifted by one step
            step = (order + (1 if k == "cos" else 0)) % 4
            base = a * (math.sin(x), math.cos(x), math.sin(x), math.cos(x))[step]
            if step >= 2:
                base = -base
        else:
            # sinh -> cosh -> sinh ...
            even = (order + (1 if k == "cosh" else 0)) % 2 == 0
            base = a * (math.sinh(x) if even else math.cosh(x))
        return s**order * base

    def evaluate(self, r: float) -> tuple[float, float, float]:
        """``(value, first derivative, second derivative)`` at ``r``."""
        return self.derivative(r, 0), self.derivative(r, 1), self.derivative(r, 2)

    def second_derivative_ratio(self) -> Optional[float]:
        """``c`` with ``value'' = c * value`` identically, or None for linear profiles."""
        s2 = self.frequency**2
        return {
            "constant": 0.0,
            "exp": s2,
            "sinh": s2,
            "cosh": s2,
            "sin": -s2,
            "cos": -s2,
        }.get(self.kind)

    def first_integral(self) -> Optional[float]:
        """Constant ``value'^2 - c value^2`` (``c`` from :meth:`second_derivative_ratio`).

        Known in closed form, so curvature terms like ``(k - value'^2)/value^2``
        can be evaluated without cancellation near zeros of ``value``.
        None for linear profiles.
        """
        e = (self.amplitude * self.frequency) ** 2
        return {"constant": 0.0, "exp": 0.0, "sin": e, "cos": e, "sinh": e, "cosh": -e}.get(self.kind)


@dataclass(frozen=True)
class WarpedProductModel:
    """``dr^2 + phi(r)^2 g_N`` on ``interval``, optionally times an Einstein factor.

    ``interval`` uses ``None`` for an infinite end.  ``fiber_einstein_constant``
    is ``rho_N`` in ``Ric_N = rho_N g_N``; ``fiber_dim = 0`` is a 1-dimensional
    base.  ``factor_dim``/``factor_einstein_constant`` describe a product factor
    that does not see ``r`` at all.
    """

    interval: tuple
    fiber_dim: int
    fiber_einstein_constant: float
    profile: ProfileFunction
    factor_dim: int = 0
    factor_einstein_constant: float = 0.0

    def __post_init__(self):
        lo, hi = self.interval
        if lo is not None and hi is not None and not lo < hi:
            raise InputError(f"empty interval {self.interval}")
        if self.fiber_dim < 0 or self.factor_dim < 0:
            raise InputError("fiber and factor dimensions must be non-negative")
        if self.dim > 16:
            raise InputError("model dimension exceeds 16")
        if self.fiber_dim == 1 and self.fiber_einstein_constant != 0.0:
            raise InputError("a 1-dimensional fiber is Ricci flat")
        if self.factor_dim == 1 and self.factor_einstein_constant != 0.0:
            raise InputError("a 1-dimensional factor is Ricci flat")

    @property
    def dim(self) -> int:
        return 1 + self.fiber_dim + self.factor_dim

    def contains(self, r: float) -> bool:
        lo, hi = self.interval
        return (lo is None or r > lo) and (hi is None or r < hi)

    def samples(self, count: int) -> np.ndarray:
        """``count`` equispaced interior points (boundary offset, bounded window)."""
        if count < 1:
            raise InputError("sample count must be positive")
        lo, hi = self.interval
        if lo is not None and hi is not None:
            off = max(BOUNDARY_OFFSET, BOUNDARY_OFFSET * (hi - lo))
            a, b = lo + off, hi - off
        elif lo is not None:
            a = lo + BOUNDARY_OFFSET
            b = a + UNBOUNDED_WINDOW
        elif hi is not None:
            b = hi - BOUNDARY_OFFSET
            a = b - UNBOUNDED_WINDOW
        else:
            a, b = -UNBOUNDED_WINDOW / 2, UNBOUNDED_WINDOW / 2
        if count == 1:
            return np.array([0.5 * (a + b)])
        return np.linspace(a, b, count)

    def _phi(self, r: float) -> tuple[float, float, float]:
        if not self.contains(r):
            raise DomainError(f"r = {r} lies outside {self.interval}")
        phi, dphi, ddphi = self.profile.evaluate(r)
        if self.fiber_dim > 0 and not phi > 0:
            raise DomainError(f"warping function is not positive at r = {r}")
        return phi, dphi, ddphi

    def _fiber_plane_curvature(self, phi: float, dphi: float) -> float:
        # (kappa - phi'^2)/phi^2, rewritten as (kappa - E)/phi^2 - c when phi'^2 = E + c phi^2
        kappa = self.fiber_einstein_constant / (self.fiber_dim - 1)
        c = self.profile.second_derivative_ratio()
        e = self.profile.first_integral()
        if e is None:
            return (kappa - dphi**2) / phi**2
        return (kappa - e) / phi**2 - c

    def radial_plane_curvature(self, phi: float, ddphi: float) -> float:
        """``-phi''/phi``, exact for profiles with a constant second-derivative ratio."""
        c = self.profile.second_derivative_ratio()
        return -c if c is not None else -ddphi / phi

    def sectional_curvatures(self, r: float) -> np.ndarray:
        """Matrix ``K[i, j]`` of sectional curvatures of frame planes at ``r``."""
        n, f, d = self.dim, self.fiber_dim, self.factor_dim
        K = np.zeros((n, n))
        if f:
            phi, dphi, ddphi = self._phi(r)
            fib = slice(1, 1 + f)
            K[0, fib] = K[fib, 0] = self.radial_plane_curvature(phi, ddphi)
            if f >= 2:
                K[fib, fib] = self._fiber_plane_curvature(phi, dphi)
        elif not self.contains(r):
            raise DomainError(f"r = {r} lies outside {self.interval}")
        if d >= 2:
            fac = slice(1 + f, n)
            K[fac, fac] = self.factor_einstein_constant / (d - 1)
        np.fill_diagonal(K, 0.0)
        return K


def ricci_at(model: WarpedProductModel, r: float) -> SymTensor2:
    """Ricci tensor at ``r`` from the warped-product block formulas.

    Radial: ``-f phi''/phi``; fiber: ``rho_N/phi^2 - phi''/phi - (f-1) phi'^2/phi^2``;
    factor: its Einstein constant.  Both are assembled from the frame-plane
    sectional curvatures, which avoid cancellation near zeros of ``phi``.
    """
    n, f, d = model.dim, model.fiber_dim, model.factor_dim
    diag = np.zeros(n)
    if f:
        phi, dphi, ddphi = model._phi(r)
        radial = model.radial_plane_curvature(phi, ddphi)
        diag[0] = f * radial
        fiber = model._fiber_plane_curvature(phi, dphi) if f >= 2 else 0.0
        diag[1 : 1 + f] = radial + (f - 1) * fiber
    elif not model.contains(r):
        raise DomainError(f"r = {r} lies outside {model.interval}")
    if d:
        diag[1 + f :] = model.factor_einstein_constant
    return SymTensor2.diag(diag)


def riemann_at(model: WarpedProductModel, r: float) -> CurvTensor4:
    """Full curvature tensor at ``r`` (space-form fibers and factor).

    The curvature operator is diagonal on frame bivectors, so
    ``R(E_i, E_j, E_j, E_i) = K_ij`` and the remaining components follow from
    the symmetries.
    """
    K = model.sectional_curvatures(r)
    n = model.dim
    R = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                R[i, j, j, i] = K[i, j]
                R[i, j, i, j] = -K[i, j]
    return CurvTensor4(R, riemann_type=True)


def scal_at(model: WarpedProductModel, r: float) -> float:
    return ricci_at(model, r).trace()


def hessian_at(model: WarpedProductModel, w: ProfileFunction, r: float) -> SymTensor2:
    """``Hess w = w'' dr^2 + w' phi phi' g_N`` for ``w = w(r)``, in the unit frame."""
    n, f = model.dim, model.fiber_dim
    _, dw, ddw = w.evaluate(r)
    diag = np.zeros(n)
    diag[0] = ddw
    if f:
        phi, dphi, _ = model._phi(r)
        diag[1 : 1 + f] = dw * dphi / phi
    return SymTensor2.diag(diag)


def qe_residual_at(model: WarpedProductModel, w: ProfileFunction, n: int, m: float, lam: float, r: float) -> float:
    """``||Hess w - (w/m)(Ric - lam g)||_inf`` at ``r``."""
    if n != model.dim:
        raise InputError(f"n = {n} does not match the model dimension {model.dim}")
    if m == 0:
        raise InputError("m must be non-zero")
    wv = w.derivative(r, 0)
    if not wv > 0:
        raise DomainError(f"w is not positive at r = {r}")
    ric = ricci_at(model, r).components
    hess = hessian_at(model, w, r).components
    return float(np.max(np.abs(hess - (wv / m) * (ric - lam * np.eye(n)))))


def mu_bar_at(w: ProfileFunction, kbar: float, r: float) -> float:
    """``kbar w^2 + |grad w|^2`` with ``w = w(r)`` and ``|grad r| = 1``."""
    value, d1, _ = w.evaluate(r)
    return kbar * value**2 + d1**2


def classify_w(kbar: float, mubar: float, atol: float = 0.0) -> str:
    """Form of ``w`` forced by ``kbar w^2 + |grad w|^2 = mubar``.

    Returns one of ``cos``, ``linear``, ``exp``, ``cosh``, ``sinh``, ``constant``
    or ``infeasible`` (``kbar > 0`` requires ``mubar > 0``).  Values within
    ``atol`` of zero count as zero.
    """
    k = 0.0 if abs(kbar) <= atol else kbar
    mu = 0.0 if abs(mubar) <= atol else mubar
    if k > 0:
        return "cos" if mu > 0 else "infeasible"
    if k == 0:
        if mu > 0:
            return "linear"
        return "constant" if mu == 0 else "infeasible"
    if mu == 0:
        return "exp"
    return "cosh" if mu < 0 else "sinh"


@dataclass(frozen=True)
class CatalogRow:
    """One instantiated row of the rigid Einstein catalog."""

    index: int
    name: str
    model: WarpedProductModel
    w: ProfileFunction
    n: int
    m: float
    lam: float
    rho: float
    mu: float


@dataclass(frozen=True)
class _RowTemplate:
    name: str
    interval: tuple
    profile: ProfileFunction
    fiber_constant: Callable[[int], float]
    w: ProfileFunction
    lam: Callable[[int, float], float]
    rho: Callable[[int, float], float]
    mu: Callable[[int, float], float]
    one_dimensional: bool


_HALF_PI = math.pi / 2
_ONE = ProfileFunction("constant")

_ROWS = (
    _RowTemplate("[-pi/2, pi/2]", (-_HALF_PI, _HALF_PI), _ONE, lambda n: 0.0, ProfileFunction("cos"),
                 lambda n, m: m, lambda n, m: 0.0, lambda n, m: m - 1, True),
    _RowTemplate("[0, inf)", (0.0, None), _ONE, lambda n: 0.0, ProfileFunction("linear"),
                 lambda n, m: 0.0, lambda n, m: 0.0, lambda n, m: m - 1, True),
    _RowTemplate("[0, inf)", (0.0, None), _ONE, lambda n: 0.0, ProfileFunction("sinh"),
                 lambda n, m: -m, lambda n, m: 0.0, lambda n, m: m - 1, True),
    _RowTemplate("(-inf, inf)", (None, None), _ONE, lambda n: 0.0, ProfileFunction("exp"),
                 lambda n, m: -m, lambda n, m: 0.0, lambda n, m: 0.0, True),
    _RowTemplate("(-inf, inf)", (None, None), _ONE, lambda n: 0.0, ProfileFunction("cosh"),
                 lambda n, m: -m, lambda n, m: 0.0, lambda n, m: -(m - 1), True),
    _RowTemplate("D^n", (0.0, _HALF_PI), ProfileFunction("sin"), lambda n: n - 2.0, ProfileFunction("cos"),
                 lambda n, m: n + m - 1, lambda n, m: n - 1.0, lambda n, m: m - 1, False),
    _RowTemplate("[0, inf) x F", (0.0, None), _ONE, lambda n: 0.0, ProfileFunction("linear"),
                 lambda n, m: 0.0, lambda n, m: 0.0, lambda n, m: m - 1, False),
    _RowTemplate("[0, inf) x N", (0.0, None), ProfileFunction("cosh"), lambda n: -(n - 2.0),
                 ProfileFunction("sinh"), lambda n, m: -(n + m - 1), lambda n, m: -(n - 1.0),
                 lambda n, m: m - 1, False),
    _RowTemplate("(-inf, inf) x F", (None, None), ProfileFunction("exp"), lambda n: 0.0, ProfileFunction("exp"),
                 lambda n, m: -(n + m - 1), lambda n, m: -(n - 1.0), lambda n, m: 0.0, False),
    _RowTemplate("H^n", (0.0, None), ProfileFunction("sinh"), lambda n: n - 2.0, ProfileFunction("cosh"),
                 lambda n, m: -(n + m - 1), lambda n, m: -(n - 1.0), lambda n, m: -(m - 1), False),
)


def catalog(n: int = 3, m: float = 2.0) -> list[CatalogRow]:
    """The ten non-trivial quasi-Einstein structures that are also Einstein.

    Rows 1-5 are 1-dimensional whatever ``n`` is; rows 6-10 are built in
    dimension ``n`` (``n >= 2``).  Sphere and hyperbolic fibers are unit
    ``S^{n-1}`` (Ricci ``n-2``), ``F`` is flat and ``N`` has Ricci ``-(n-2)``.
    """
    if n < 2:
        raise InputError("rows 6-10 need n >= 2")
    if not m > 0:
        raise InputError("m must be positive")
    rows = []
    for idx, t in enumerate(_ROWS, start=1):
        dim = 1 if t.one_dimensional else n
        model = WarpedProductModel(
            interval=t.interval,
            fiber_dim=dim - 1,
            fiber_einstein_constant=t.fiber_constant(dim) if dim > 2 else 0.0,
            profile=t.profile,
        )
        rows.append(
            CatalogRow(idx, t.name, model, t.w, dim, float(m),
                       float(t.lam(dim, m)), float(t.rho(dim, m)), float(t.mu(dim, m)))
        )
    return rows
