"""A two-parameter family of non-rigid left-invariant quasi-Einstein metrics.

For ``m > 0`` and real ``alpha``, ``beta != 0`` the 4-dimensional solvable
algebra spanned by orthonormal ``X_0 .. X_3`` with

    [X_1, X_2] = alpha X_2 + beta X_3,   [X_1, X_3] = beta X_2 + (2 - alpha) X_3,
    [X_0, X_i] = F_ij X_j  (i, j in {2, 3})

carries a quasi-Einstein structure with ``w = exp(sqrt(-kbar) r)`` and

    lam = -2 (2 - 2 alpha + alpha^2 + beta^2),   z^2 = -4 / (lam (m + 2) + 4),
    rho = 2 lam (lam + 2) / (lam (m + 2) + 4),
    F_23 = F_32 = z beta,  F_33 = -(alpha^2 - alpha + beta^2) z,
    F_22 = -(2 - 3 alpha + alpha^2 + beta^2) z.

On the circle ``(alpha - 1)^2 + beta^2 = 1`` the structure is rigid.  As
``m -> infinity`` the metrics converge to ``R x S`` with ``S`` the
3-dimensional solvsoliton built by :func:`limit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, QEMError
from .lie_geometry import (
    LieAlgebraMetric,
    SolitonData,
    curvature,
    derivation_residual,
    jacobi_residual,
    raw_ricci,
    solvsoliton_residual,
)
from .qe_analysis import (
    LieGeometry,
    QEParameters,
    QEStructure,
    RigidityReport,
    derive_structure,
    left_invariant_qe_residual,
    rigidity_certificate,
)
from .tensor_core import scale_of, sup_norm

RIGID_LOCUS_TOL = 1e-12
FAMILY_JACOBI_TOL = 1e-14
SELF_CHECK_TOL = 1e-12
MONOTONE_TOL = 1e-14


def family_lambda(alpha: float, beta: float) -> float:
    return -2.0 * (2.0 - 2.0 * alpha + alpha**2 + beta**2)


@dataclass(frozen=True)
class FamilyParams:
    m: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("m", "alpha", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")
        if not self.m > 0:
            raise InputError(f"m must be positive, got {self.m}")
        if self.beta == 0:
            raise InputError("beta must be non-zero")

    @property
    def on_rigid_locus(self) -> bool:
        return abs((self.alpha - 1.0) ** 2 + self.beta**2 - 1.0) <= RIGID_LOCUS_TOL


@dataclass(frozen=True, eq=False)
class FamilyRealization:
    """Output of :func:`build`.  ``qe`` is None at ``m = 1``, where ``rho`` cannot be read off ``scal``."""

    params: FamilyParams
    lam: float
    rho: float
    z: float
    F: np.ndarray
    algebra: LieAlgebraMetric
    qe: Optional[QEStructure]

    @property
    def radial(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class VerificationReport:
    qe_residual: float
    scal_residual: float
    jacobi_residual: float
    certificate: Optional[RigidityReport]

    def passed(self, tol: float = SELF_CHECK_TOL) -> bool:
        return max(self.qe_residual, self.scal_residual, self.jacobi_residual) <= tol


@dataclass(frozen=True, eq=False)
class LimitSolvsoliton:
    lam: float
    algebra: LieAlgebraMetric
    soliton: SolitonData

    @property
    def soliton_residual(self) -> float:
        return solvsoliton_residual(self.algebra, self.soliton)

    @property
    def derivation_residual(self) -> float:
        return derivation_residual(self.algebra, self.soliton.D)


@dataclass(frozen=True)
class SweepPoint:
    m: float
    f_norm: float
    relation_gap: float
    ricci_gap: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    points: tuple
    limit: LimitSolvsoliton
    monotone: dict

    @property
    def all_monotone(self) -> bool:
        return all(self.monotone.values())


def _brackets(alpha: float, beta: float, F: np.ndarray) -> LieAlgebraMetric:
    return LieAlgebraMetric.from_brackets(
        4,
        {
            (1, 2): [0.0, 0.0, alpha, beta],
            (1, 3): [0.0, 0.0, beta, 2.0 - alpha],
            (0, 2): [0.0, 0.0, F[0, 0], F[0, 1]],
            (0, 3): [0.0, 0.0, F[1, 0], F[1, 1]],
        },
    )


def build(params: FamilyParams) -> FamilyRealization:
    """Construct the algebra and structure for ``params``.

    ``z`` is the negative root: the defining relation
    ``-2 - (lam + 2) z^2 = z sqrt(m (rho - lam))`` has a negative left side.
    Both that relation and two independent expressions for ``rho - lam`` are
    asserted before returning.
    """
    m, a, b = params.m, params.alpha, params.beta
    lam = family_lambda(a, b)
    denom = lam * (m + 2.0) + 4.0
    z2 = -4.0 / denom
    z = -math.sqrt(z2)
    rho = 2.0 * lam * (lam + 2.0) / denom

    gap = -lam * ((lam + 2.0) * z2 / 2.0 + 1.0)
    if abs(gap - (rho - lam)) > SELF_CHECK_TOL * scale_of(lam, rho):
        raise QEMError(f"rho - lam disagrees between its two closed forms ({gap} vs {rho - lam})")
    root = math.sqrt(m * gap)
    if abs(-2.0 - (lam + 2.0) * z2 - z * root) > SELF_CHECK_TOL * scale_of(lam * z2, z * root):
        raise QEMError("defining relation for z fails; wrong root chosen")

    F = np.array(
        [
            [-(2.0 - 3.0 * a + a * a + b * b) * z, z * b],
            [z * b, -(a * a - a + b * b) * z],
        ]
    )
    algebra = _brackets(a, b, F)
    jac = jacobi_residual(algebra)
    if jac > FAMILY_JACOBI_TOL * scale_of(algebra.C) ** 2:
        raise QEMError(f"family algebra fails Jacobi ({jac:.3g})")

    qe = None
    if m != 1:
        qe = derive_structure(QEParameters(4, m, lam), LieGeometry(algebra, np.array([1.0, 0.0, 0.0, 0.0])))
    F.setflags(write=False)
    return FamilyRealization(params, lam, rho, z, F, algebra, qe)


def perturb(algebra: LieAlgebraMetric, entry: tuple, delta: float) -> LieAlgebraMetric:
    """Add ``delta`` to ``g([X_i, X_j], X_k)`` (and its antisymmetric partner)."""
    i, j, k = entry
    if i == j:
        raise InputError("cannot perturb a diagonal bracket")
    c = np.array(algebra.C)
    c[i, j, k] += delta
    c[j, i, k] -= delta
    return LieAlgebraMetric(c)


def verify_brackets(algebra: LieAlgebraMetric, radial, m: float, lam: float, rho: float) -> VerificationReport:
    """Residuals of the left-invariant equation and the scalar-curvature identity.

    Brackets that fail Jacobi are still evaluated, with the diagnostic
    :func:`qem.lie_geometry.raw_ricci`, and get no rigidity certificate.
    """
    jac = jacobi_residual(algebra)
    admitted = jac <= FAMILY_JACOBI_TOL * scale_of(algebra.C) ** 2
    if admitted:
        ric = curvature(algebra).Ric.components
    else:
        ric = raw_ricci(algebra)
    qe_res = left_invariant_qe_residual(algebra, radial, m, lam, rho, ric=ric)
    scal = float(np.trace(ric))
    scal_res = abs(scal - (3.0 * lam - (m - 1.0) * rho))
    cert = None
    if admitted and m != 1:
        try:
            qe = derive_structure(QEParameters(algebra.dim, m, lam), LieGeometry(algebra, radial))
        except QEMError:
            qe = None
        if qe is not None:
            cert = rigidity_certificate(qe)
    return VerificationReport(qe_res, scal_res, jac, cert)


def verify(r: FamilyRealization) -> VerificationReport:
    rep = verify_brackets(r.algebra, r.radial, r.params.m, r.lam, r.rho)
    if r.qe is not None and rep.certificate is None:
        rep = VerificationReport(rep.qe_residual, rep.scal_residual, rep.jacobi_residual, rigidity_certificate(r.qe))
    return rep


def limit(alpha: float, beta: float) -> LimitSolvsoliton:
    """The 3-dimensional solvsoliton ``Ric = lam I + D`` approached as ``m -> infinity``."""
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise InputError("alpha and beta must be finite")
    if beta == 0:
        raise InputError("beta must be non-zero")
    lam = family_lambda(alpha, beta)
    algebra = LieAlgebraMetric.from_brackets(
        3,
        {
            (0, 1): [0.0, alpha, beta],
            (0, 2): [0.0, beta, 2.0 - alpha],
        },
    )
    ad1 = algebra.ad(0)[1:, 1:]
    D = np.zeros((3, 3))
    D[1:, 1:] = -lam * np.eye(2) - 2.0 * ad1
    return LimitSolvsoliton(lam, algebra, SolitonData(lam, D))


def _check_m_list(m_list: Sequence[float]) -> list[float]:
    ms = [float(x) for x in m_list]
    if not ms:
        raise InputError("m list is empty")
    if any(not (math.isfinite(x) and x > 0) for x in ms):
        raise InputError("m values must be positive and finite")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise InputError("m values must be strictly ascending")
    return ms


def convergence_sweep(alpha: float, beta: float, m_list: Sequence[float]) -> SweepResult:
    """Per-``m`` distances to the limit: ``||F||_inf``, ``|z sqrt(m(rho-lam)) + 2|`` and the Ricci gap.

    The Ricci gap compares ``Ric`` on ``span{X_1, X_2, X_3}`` with the Ricci
    tensor of :func:`limit`.  Each diagnostic must be nonincreasing in ``m``
    up to ``MONOTONE_TOL``.
    """
    ms = _check_m_list(m_list)
    lim = limit(alpha, beta)
    lim_ric = curvature(lim.algebra).Ric.components
    points = []
    for m in ms:
        r = build(FamilyParams(m, alpha, beta))
        ric = curvature(r.algebra).Ric.components
        points.append(
            SweepPoint(
                m=m,
                f_norm=sup_norm(r.F),
                relation_gap=abs(r.z * math.sqrt(m * (r.rho - r.lam)) + 2.0),
                ricci_gap=sup_norm(ric[1:, 1:] - lim_ric),
            )
        )
    monotone = {}
    for name in ("f_norm", "relation_gap", "ricci_gap"):
        vals = [getattr(p, name) for p in points]
        monotone[name] = all(b <= a + MONOTONE_TOL for a, b in zip(vals, vals[1:]))
    return SweepResult(tuple(points), lim, monotone)
