"""Quasi-Einstein structures with constant scalar curvature.

A structure is ``(M, g, w)`` with ``Hess w = (w/m)(Ric - lam g)``.  From the
geometry we derive

* ``rho = ((n-1) lam - scal) / (m-1)``, ``kbar = (lam - rho) / m``,
* ``mubar = kbar w^2 + |grad w|^2`` (constant) and ``mu = (m-1) mubar``,
* ``P = Ric - rho g`` and ``Q = R + (2/m) P o g + ((rho-lam)/m) g o g``

and evaluate the identities that hold when ``scal`` is constant.

Two geometries are supported.  On a Lie group with left-invariant metric,
``w = exp(sqrt(-kbar) r)`` is never materialized: all checks are written for
``w = 1`` after cancelling the common power of ``w``, and only the unit
gradient direction and ``sqrt(-kbar)`` enter.  The frame vector ``X_0`` of the
left-invariant equation

    Ric(X,Y) - 1/2 sqrt(m(rho-lam)) (g([X_0,X],Y) + g([X_0,Y],X))
             - (rho-lam) g(X_0,X) g(X_0,Y) = lam g(X,Y)

points *against* ``grad w``: Koszul gives
``g(nabla_X X_0, Y) = -1/2 (g([X_0,X],Y) + g([X_0,Y],X))`` whenever ``X_0`` is
orthogonal to the derived algebra, so ``grad w / w = -sqrt(-kbar) X_0``.

Warped products are handled pointwise at interior sample radii and every
check reports the maximum over samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import DomainError, InfeasibleError, InputError, StructureRejected
from .lie_geometry import (
    LieAlgebraMetric,
    covariant_derivative_sym2,
    curvature,
    distribution_integrability,
    levi_civita,
)
from .tensor_core import (
    CurvTensor4,
    Spectrum,
    SymTensor2,
    as_vector,
    kulkarni_nomizu,
    q_trace_check,
    scale_of,
    sup_norm,
    sym_eigen,
)
from .warped_geometry import (
    CatalogRow,
    ProfileFunction,
    WarpedProductModel,
    catalog,
    hessian_at,
    mu_bar_at,
    riemann_at,
    ricci_at,
)

IDENTITY_TOL = 1e-10
RIGID_ACCEPT = 1e-8
RIGID_REJECT = 1e-6
INTEGRABILITY_TOL = 1e-10
SCAL_CONSTANCY_TOL = 1e-9
DEFAULT_SAMPLES = 20


@dataclass(frozen=True)
class QEParameters:
    n: int
    m: float
    lam: float

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be at least 1")
        if not (math.isfinite(self.m) and self.m > 0):
            raise InputError("m must be a positive real")
        if not math.isfinite(self.lam):
            raise InputError("lambda must be finite")


@dataclass(frozen=True, eq=False)
class LieGeometry:
    """Left-invariant metric plus the unit frame vector ``X_0`` of the left-invariant equation."""

    algebra: LieAlgebraMetric
    radial: np.ndarray

    def __post_init__(self):
        v = as_vector(self.radial, self.algebra.dim)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise InputError("radial direction must be a unit vector")
        object.__setattr__(self, "radial", v)


@dataclass(frozen=True, eq=False)
class WarpedGeometry:
    model: WarpedProductModel
    w: ProfileFunction
    samples: int = DEFAULT_SAMPLES


Geometry = Union[LieGeometry, WarpedGeometry]


@dataclass(frozen=True, eq=False)
class FramePoint:
    """Curvature and ``w`` data at one point, in the orthonormal frame.

    On Lie models ``w = 1`` and ``grad_w = sqrt(-kbar) * direction``.
    """

    r: Optional[float]
    R: CurvTensor4
    Ric: SymTensor2
    w: float
    grad_w: np.ndarray
    hess_w: np.ndarray
    direction: np.ndarray  # unit radial direction, oriented along grad w

    @property
    def scal(self) -> float:
        return self.Ric.trace()


@dataclass(frozen=True, eq=False)
class QEStructure:
    params: QEParameters
    geometry: Geometry
    rho: float
    kbar: float
    mubar: float
    mu: float
    points: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> float:
        return self.params.m

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def is_lie(self) -> bool:
        return isinstance(self.geometry, LieGeometry)


@dataclass(frozen=True, eq=False)
class PQTensors:
    P: SymTensor2
    Q: CurvTensor4
    r: Optional[float] = None


class CSWResiduals(NamedTuple):
    p_grad: float
    norm_identity: float
    divergence: float


@dataclass(frozen=True, eq=False)
class RigidityReport:
    ric_eigenvalues: Spectrum
    p_eigenvalues: Spectrum
    verdict: str
    integrability_defects: dict
    dim3_p12: Optional[tuple]
    max_spectral_distance: float


def _reject_m_one(m: float) -> None:
    if m == 1:
        raise InputError("rho = ((n-1) lam - scal)/(m-1) is undefined at m = 1")


def rho_from_scal(n: int, m: float, lam: float, scal: float) -> float:
    _reject_m_one(m)
    return ((n - 1) * lam - scal) / (m - 1)


def _lie_points(geo: LieGeometry, kbar: float) -> tuple:
    L = geo.algebra
    cd = curvature(L)
    gamma = levi_civita(L).gamma
    u = -geo.radial
    c = math.sqrt(-kbar) if kbar < 0 else 0.0
    # Hess w / w = c^2 u u^T + c (nabla u), nabla u[i, j] = g(nabla_{X_i} u, X_j)
    nabla_u = np.einsum("a,iaj->ij", u, gamma)
    hess = c * c * np.outer(u, u) + c * nabla_u
    return (FramePoint(None, cd.R, cd.Ric, 1.0, c * u, hess, u),)


def _warped_point(model: WarpedProductModel, w: ProfileFunction, r: float) -> FramePoint:
    wv, dw, _ = w.evaluate(r)
    if not wv > 0:
        raise DomainError(f"w is not positive at r = {r}")
    e0 = np.zeros(model.dim)
    e0[0] = 1.0
    direction = -e0 if dw < 0 else e0
    return FramePoint(
        float(r),
        riemann_at(model, r),
        ricci_at(model, r),
        wv,
        dw * e0,
        hessian_at(model, w, r).components,
        direction,
    )


def derive_structure(params: QEParameters, geometry: Geometry) -> QEStructure:
    """Derive ``rho, kbar, mubar, mu`` and admit the structure.

    Rejects ``m = 1``, non-constant scalar curvature and violations of the
    sign rule ``sign(lam - rho) = sign(lam)``.
    """
    n, m, lam = params.n, params.m, params.lam
    _reject_m_one(m)
    if isinstance(geometry, LieGeometry):
        if geometry.algebra.dim != n:
            raise InputError(f"n = {n} but the algebra has dimension {geometry.algebra.dim}")
        scal = curvature(geometry.algebra).scal
        rho = rho_from_scal(n, m, lam, scal)
        kbar = (lam - rho) / m
        if kbar > IDENTITY_TOL * scale_of(lam, rho):
            raise StructureRejected(
                f"left-invariant structures have w = exp(sqrt(-kbar) r) and need kbar <= 0, got {kbar:.6g}"
            )
        kbar = min(kbar, 0.0)
        points = _lie_points(geometry, kbar)
        mubar = 0.0
    elif isinstance(geometry, WarpedGeometry):
        model = geometry.model
        if model.dim != n:
            raise InputError(f"n = {n} but the warped model has dimension {model.dim}")
        points = tuple(_warped_point(model, geometry.w, r) for r in model.samples(geometry.samples))
        scals = np.array([p.scal for p in points])
        if np.ptp(scals) > SCAL_CONSTANCY_TOL * scale_of(scals):
            raise StructureRejected(f"scalar curvature is not constant (spread {np.ptp(scals):.3g})")
        scal = float(np.mean(scals))
        rho = rho_from_scal(n, m, lam, scal)
        kbar = (lam - rho) / m
        mus = np.array([mu_bar_at(geometry.w, kbar, p.r) for p in points])
        terms = [kbar * p.w**2 for p in points] + [float(p.grad_w @ p.grad_w) for p in points]
        if np.ptp(mus) > SCAL_CONSTANCY_TOL * scale_of(terms):
            raise StructureRejected(f"kbar w^2 + |grad w|^2 is not constant (spread {np.ptp(mus):.3g})")
        mubar = float(mus[0])
    else:
        raise InputError(f"unsupported geometry {type(geometry).__name__}")

    if lam != 0 and not (lam - rho) * lam > 0:
        raise StructureRejected(
            f"sign rule violated: lam = {lam:.6g} but lam - rho = {lam - rho:.6g} (cannot occur for a valid structure)"
        )
    return QEStructure(params, geometry, rho, kbar, mubar, (m - 1) * mubar, points)


def _point_for(qe: QEStructure, pq: Optional[PQTensors]) -> list:
    if pq is None or qe.is_lie:
        return list(qe.points)
    for p in qe.points:
        if p.r == pq.r:
            return [p]
    return [_warped_point(qe.geometry.model, qe.geometry.w, pq.r)]


def _pq_at(qe: QEStructure, point: FramePoint) -> PQTensors:
    n, m = qe.n, qe.m
    P = point.Ric - qe.rho * np.eye(n)
    if n >= 2:
        g = np.eye(n)
        Q = point.R.components + (2.0 / m) * np.asarray(kulkarni_nomizu(P, g)) + (
            (qe.rho - qe.lam) / m
        ) * np.asarray(kulkarni_nomizu(g, g))
    else:
        Q = np.zeros((1, 1, 1, 1))
    return PQTensors(P, CurvTensor4(Q, riemann_type=True), point.r)


def build_pq(qe: QEStructure, r: Optional[float] = None) -> PQTensors:
    """``P`` and ``Q`` at the Lie point, or at sample ``r`` (default: first sample)."""
    if qe.is_lie or r is None:
        point = qe.points[0]
    else:
        point = _point_for(qe, PQTensors(SymTensor2.zeros(qe.n), CurvTensor4.zeros(max(qe.n, 1)), r))[0]
    pq = _pq_at(qe, point)
    tol = 1e-9 * scale_of(point.R, point.Ric)
    if trace_p_defect(qe, pq) > tol or q_trace_check(pq.Q, pq.P, qe.n, qe.m) > tol:
        raise StructureRejected("P/Q trace identities fail; the inputs are inconsistent")
    return pq


def pq_points(qe: QEStructure) -> list:
    """``(FramePoint, PQTensors)`` for every evaluation point."""
    return [(p, _pq_at(qe, p)) for p in qe.points]


def trace_p_defect(qe: QEStructure, pq: PQTensors) -> float:
    """``|tr P - ((n-1) lam - (n+m-1) rho)|``."""
    n, m = qe.n, qe.m
    return abs(pq.P.trace() - ((n - 1) * qe.lam - (n + m - 1) * qe.rho))


def _divergence_p(qe: QEStructure, point: FramePoint, P: np.ndarray) -> np.ndarray:
    if qe.is_lie:
        L = qe.geometry.algebra
        dP = covariant_derivative_sym2(L, levi_civita(L), P)
        return np.einsum("iik->k", dP)
    # P = a dr^2 + b g_fiber + c g_factor:  div P = (a' + f (phi'/phi)(a - b)) dr
    model = qe.geometry.model
    f = model.fiber_dim
    out = np.zeros(qe.n)
    if f:
        r = point.r
        phi, dphi, ddphi = model.profile.evaluate(r)
        if model.profile.second_derivative_ratio() is not None:
            da = 0.0  # a = -f phi''/phi is constant
        else:
            dddphi = model.profile.derivative(r, 3)
            da = -f * (dddphi * phi - ddphi * dphi) / phi**2
        out[0] = da + f * (dphi / phi) * (P[0, 0] - P[1, 1])
    return out


def csw_identity_suite(qe: QEStructure, pq: Optional[PQTensors] = None) -> CSWResiduals:
    """Residuals of ``P(grad w) = 0``, ``|P|^2 = (lam - rho) tr P`` and ``div P = 0``.

    ``P(grad w)`` is measured with ``w`` normalized to 1 on Lie models.
    """
    worst = [0.0, 0.0, 0.0]
    for point in _point_for(qe, pq):
        P = (pq if pq is not None else _pq_at(qe, point)).P
        Pa = P.components
        worst[0] = max(worst[0], float(np.linalg.norm(Pa @ point.grad_w)))
        worst[1] = max(worst[1], abs(P.norm_squared() - (qe.lam - qe.rho) * P.trace()))
        worst[2] = max(worst[2], float(np.linalg.norm(_divergence_p(qe, point, Pa))))
    return CSWResiduals(*worst)


def dim3_p12(trP: float, m: float, rho: float) -> tuple[float, float]:
    """Non-radial eigenvalues ``(trP -+ sqrt(m rho trP)) / 2`` of ``P`` in dimension 3."""
    disc = m * rho * trP
    if disc < -1e-12 * scale_of(m * rho, trP):
        raise InfeasibleError(f"m rho trP = {disc:.6g} < 0: no 3-dimensional structure has these values")
    root = math.sqrt(max(disc, 0.0))
    return 0.5 * (trP - root), 0.5 * (trP + root)


def _complement_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of unit ``u``."""
    n = u.shape[0]
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    return q[:, 1:n]


def dim3_spectrum_defect(qe: QEStructure) -> float:
    """Distance between :func:`dim3_p12` and the eigenvalues of ``P`` on ``grad w``'s complement."""
    if qe.n != 3:
        raise InputError("the two-eigenvalue formula is specific to dimension 3")
    worst = 0.0
    for point, pq in pq_points(qe):
        B = _complement_basis(point.direction)
        restricted = np.linalg.eigvalsh(B.T @ pq.P.components @ B)
        p1, p2 = dim3_p12(pq.P.trace(), qe.m, qe.rho)
        worst = max(worst, abs(restricted[0] - p1), abs(restricted[1] - p2))
    return worst


def _grad_norm_ok(point: FramePoint) -> bool:
    return float(np.linalg.norm(point.grad_w)) > 1e-14 * max(1.0, abs(point.w))


def radial_q_flatness(qe: QEStructure, pq: Optional[PQTensors] = None) -> float:
    """``max |Q(u, E_i, E_j, u)|`` for the unit gradient direction ``u``.

    Points where ``grad w`` vanishes are skipped; a structure with ``grad w``
    vanishing at every point is rejected.
    """
    worst = None
    for point in _point_for(qe, pq):
        if not _grad_norm_ok(point):
            continue
        Q = (pq if pq is not None else _pq_at(qe, point)).Q.components
        u = point.direction
        val = sup_norm(np.einsum("a,aijb,b->ij", u, Q, u))
        worst = val if worst is None else max(worst, val)
    if worst is None:
        raise DomainError("grad w vanishes at every evaluation point")
    return worst


def p_quadratic_residual(pq: PQTensors, lam: float, rho: float) -> float:
    """``||P o (P - (lam - rho) I)||_inf`` as an operator composition."""
    P = pq.P.components
    return sup_norm(P @ (P - (lam - rho) * np.eye(P.shape[0])))


def deriv_p_identity(qe: QEStructure, pq: Optional[PQTensors] = None) -> float:
    """Defect of ``(w/m)((nabla_X P)(Y,Z) - (nabla_Y P)(X,Z)) = -Q(X, Y, Z, grad w)``.

    Lie models only; the common factor ``w`` is cancelled, leaving
    ``grad w / w = sqrt(-kbar) u``.
    """
    if not qe.is_lie:
        raise InputError("deriv_p_identity needs a left-invariant (Lie) model")
    if not qe.kbar < 0:
        raise InputError(f"deriv_p_identity needs kbar < 0, got {qe.kbar:.6g}")
    point = qe.points[0]
    pq = pq if pq is not None else _pq_at(qe, point)
    L = qe.geometry.algebra
    dP = covariant_derivative_sym2(L, levi_civita(L), pq.P.components)
    lhs = (dP - dP.transpose(1, 0, 2)) / qe.m
    q_grad = np.einsum("xyzw,w->xyz", pq.Q.components, point.grad_w)
    return sup_norm(lhs + q_grad)


def hessian_residual(qe: QEStructure) -> float:
    """``max |Hess w - (w/m)(Ric - lam g)|`` over evaluation points (``w = 1`` on Lie models)."""
    worst = 0.0
    eye = np.eye(qe.n)
    for p in qe.points:
        target = (p.w / qe.m) * (p.Ric.components - qe.lam * eye)
        worst = max(worst, sup_norm(p.hess_w - target))
    return worst


def left_invariant_qe_residual(L: LieAlgebraMetric, radial, m: float, lam: float, rho: float, ric=None) -> float:
    """Sup-norm defect of the left-invariant form of the quasi-Einstein equation.

    ``ric`` may be supplied (e.g. a diagnostic Ricci matrix); by default it is
    taken from :func:`qem.lie_geometry.curvature`.
    """
    x0 = as_vector(radial, L.dim)
    ric = curvature(L).Ric.components if ric is None else np.asarray(ric, dtype=float)
    # A[x, y] = g([X_0, X_x], X_y)
    A = np.einsum("a,axy->xy", x0, L.C)
    root = math.sqrt(max(m * (rho - lam), 0.0))
    lhs = ric - 0.5 * root * (A + A.T) - (rho - lam) * np.outer(x0, x0)
    return sup_norm(lhs - lam * np.eye(L.dim))


def qe_residual(qe: QEStructure) -> float:
    """Quasi-Einstein equation defect: left-invariant form on Lie models, pointwise on warped ones."""
    if qe.is_lie:
        geo = qe.geometry
        return left_invariant_qe_residual(geo.algebra, geo.radial, qe.m, qe.lam, qe.rho)
    return hessian_residual(qe)


def scalar_bound_violation(qe: QEStructure, atol: float = IDENTITY_TOL) -> float:
    """How far ``scal`` leaves ``[n min(lam, rho), n max(lam, rho)]`` (0 when inside)."""
    lo = qe.n * min(qe.lam, qe.rho)
    hi = qe.n * max(qe.lam, qe.rho)
    worst = 0.0
    for p in qe.points:
        worst = max(worst, lo - p.scal - atol, p.scal - hi - atol, 0.0)
    return worst


def rho_range_violation(qe: QEStructure) -> float:
    """How far ``rho`` leaves ``[lam, 0]`` (``lam < 0``) or ``[0, lam]`` (``lam > 0``)."""
    lo, hi = sorted((qe.lam, 0.0))
    return max(lo - qe.rho, qe.rho - hi, 0.0)


def radial_curvature_defect(qe: QEStructure, tol: float = RIGID_ACCEPT) -> float:
    """Check ``R(X, grad r) grad r = 0`` on ``lam``-directions and ``= kbar X`` on ``rho``-directions.

    Directions are the eigenvectors of ``P`` orthogonal to ``grad r``;
    eigenvalue ``lam - rho`` marks a ``lam``-direction and ``0`` a
    ``rho``-direction.  Other eigenvectors are not classified and skipped.
    """
    worst = 0.0
    for point, pq in pq_points(qe):
        u = point.direction
        B = _complement_basis(u)
        vals, vecs = np.linalg.eigh(B.T @ pq.P.components @ B)
        R = point.R.components
        for k in range(vals.shape[0]):
            v = B @ vecs[:, k]
            sec = float(np.einsum("a,b,c,d,abcd->", v, u, u, v, R))
            if abs(vals[k] - (qe.lam - qe.rho)) <= tol:
                worst = max(worst, abs(sec))
            elif abs(vals[k]) <= tol:
                worst = max(worst, abs(sec - qe.kbar))
    return worst


def rigidity_certificate(
    qe: QEStructure,
    pq: Optional[PQTensors] = None,
    accept: float = RIGID_ACCEPT,
    reject: float = RIGID_REJECT,
    integrability_tol: float = INTEGRABILITY_TOL,
) -> RigidityReport:
    """Finite numerical rigidity test.

    ``rigid``: Einstein, or every Ricci eigenvalue lies within ``accept`` of
    ``lam`` or ``rho`` and both eigen-distributions are involutive (Lie
    models; warped models split along frame blocks by construction).
    ``non_rigid``: some eigenvalue is at least ``reject`` away from both.
    Anything else is ``inconclusive``.
    """
    lam, rho = qe.lam, qe.rho
    points = _point_for(qe, pq)
    spectra = [sym_eigen(p.Ric) for p in points]
    dist = 0.0
    einstein = True
    for spec in spectra:
        ev = spec.eigenvalues
        dist = max(dist, max(min(abs(e - lam), abs(e - rho)) for e in ev))
        einstein = einstein and (ev[-1] - ev[0]) <= accept
    defects: dict = {}
    if einstein:
        verdict = "rigid"
    elif dist >= reject:
        verdict = "non_rigid"
    elif dist <= accept:
        if qe.is_lie:
            L = qe.geometry.algebra
            spec = spectra[0]
            for name, value in (("lambda", lam), ("rho", rho)):
                basis = spec.eigenspace(value, accept)
                defects[name] = distribution_integrability(L, basis) if basis else 0.0
        else:
            defects = {"lambda": 0.0, "rho": 0.0}
        verdict = "rigid" if all(d <= integrability_tol for d in defects.values()) else "inconclusive"
    else:
        verdict = "inconclusive"

    first = points[0]
    P = first.Ric - rho * np.eye(qe.n)
    p12 = None
    if qe.n == 3:
        try:
            p12 = dim3_p12(P.trace(), qe.m, rho)
        except InfeasibleError:
            p12 = None
    return RigidityReport(spectra[0], sym_eigen(P), verdict, defects, p12, dist)


def rigid_products(m: float, factor_dim: int = 2) -> list:
    """Split rigid models ``(1-d catalog row) x (lam-Einstein space form of dimension factor_dim)``.

    ``w`` is constant on the factor, so the product is again quasi-Einstein
    with the same ``lam`` and ``rho = 0``.
    """
    out = []
    for row in catalog(2, m)[:5]:
        if factor_dim == 1 and row.lam != 0:
            continue
        model = WarpedProductModel(
            interval=row.model.interval,
            fiber_dim=0,
            fiber_einstein_constant=0.0,
            profile=row.model.profile,
            factor_dim=factor_dim,
            factor_einstein_constant=row.lam,
        )
        out.append(
            CatalogRow(row.index, f"{row.name} x E^{factor_dim}", model, row.w, 1 + factor_dim,
                       row.m, row.lam, 0.0, row.mu)
        )
    return out


def structure_from_row(row: CatalogRow, samples: int = DEFAULT_SAMPLES) -> QEStructure:
    return derive_structure(QEParameters(row.n, row.m, row.lam), WarpedGeometry(row.model, row.w, samples))
