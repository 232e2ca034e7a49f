import itertools
import math

import numpy as np
import numpy.testing as npt
import pytest

from qem.errors import InfeasibleError, InputError, StructureRejected
from qem.lie_geometry import LieAlgebraMetric, curvature
from qem.qe_analysis import (
    LieGeometry,
    QEParameters,
    WarpedGeometry,
    build_pq,
    csw_identity_suite,
    deriv_p_identity,
    derive_structure,
    dim3_p12,
    dim3_spectrum_defect,
    hessian_residual,
    p_quadratic_residual,
    PQTensors,
    pq_points,
    qe_residual,
    radial_curvature_defect,
    radial_q_flatness,
    rho_range_violation,
    rigid_products,
    rigidity_certificate,
    scalar_bound_violation,
    structure_from_row,
    trace_p_defect,
)
from qem.solvable_family import FamilyParams, build
from qem.tensor_core import CurvTensor4, SymTensor2, q_trace_check
from qem.warped_geometry import ProfileFunction, WarpedProductModel, catalog

GOLDEN_RIC = np.array(
    [
        [-2.4, 0.0, 0.0, 0.0],
        [0.0, -6.0, 0.0, 0.0],
        [0.0, 0.0, -2.4, -1.2],
        [0.0, 0.0, -1.2, -4.8],
    ]
)


def q_oracle(R, P, n, m, lam, rho):
    """Q assembled index by index, without the library's Kulkarni-Nomizu product."""
    g = np.eye(n)
    Q = np.array(R, dtype=float)
    for x, y, z, w in itertools.product(range(n), repeat=4):
        pg = 0.5 * (g[x, w] * P[y, z] + g[y, z] * P[x, w] - g[x, z] * P[y, w] - g[y, w] * P[x, z])
        gg = g[x, w] * g[y, z] - g[x, z] * g[y, w]
        Q[x, y, z, w] += (2 / m) * pg + ((rho - lam) / m) * gg
    return Q


def hyperbolic_lie(n):
    """Real hyperbolic space as ``[X_0, X_i] = X_i``."""
    return LieAlgebraMetric.from_brackets(n, {(0, i): np.eye(n)[i] for i in range(1, n)})


@pytest.fixture(scope="module")
def golden():
    return build(FamilyParams(2.0, 0.0, 1.0)).qe


@pytest.fixture(scope="module")
def rigid():
    return build(FamilyParams(3.0, 1.0, 1.0)).qe


def all_catalog_structures():
    for n in (3, 4, 5):
        for m in (1.5, 2.0, 3.0, 7.0):
            for row in catalog(n, m):
                if row.n == 1 and n != 3:
                    continue
                yield row


def test_derive_row6():
    row = catalog(3, 2.0)[5]
    qe = structure_from_row(row)
    assert (qe.rho, qe.kbar, qe.mubar, qe.mu) == pytest.approx((2.0, 1.0, 1.0, 1.0), abs=1e-12)


def test_derive_golden(golden):
    assert golden.rho == pytest.approx(-2.4, abs=1e-12)
    assert golden.kbar == pytest.approx(-1.8, abs=1e-12)
    assert golden.mubar == 0.0 and golden.mu == 0.0


def test_derive_flat_abelian():
    qe = derive_structure(QEParameters(3, 2.0, 0.0), LieGeometry(LieAlgebraMetric(np.zeros((3, 3, 3))), [1, 0, 0]))
    assert qe.rho == 0.0 and qe.kbar == 0.0


def test_m_equal_one_rejected():
    with pytest.raises(InputError, match="m = 1"):
        derive_structure(QEParameters(3, 1.0, 0.0), LieGeometry(hyperbolic_lie(3), [1, 0, 0]))


def test_nonconstant_scal_rejected():
    model = WarpedProductModel((0.0, None), 2, 1.0, ProfileFunction("linear", 0.5))
    with pytest.raises(StructureRejected, match="not constant"):
        derive_structure(QEParameters(3, 2.0, 0.0), WarpedGeometry(model, ProfileFunction("exp")))


def test_sign_coherence_rejected():
    flat = LieGeometry(LieAlgebraMetric(np.zeros((3, 3, 3))), [1, 0, 0])
    with pytest.raises(StructureRejected, match="sign rule"):
        derive_structure(QEParameters(3, 2.0, 1.0), flat)


def test_positive_kbar_rejected_on_lie():
    with pytest.raises(StructureRejected, match="kbar"):
        derive_structure(QEParameters(3, 0.5, -1.0), LieGeometry(hyperbolic_lie(3), [1, 0, 0]))


def test_radial_must_be_unit():
    with pytest.raises(InputError):
        LieGeometry(hyperbolic_lie(3), [2.0, 0, 0])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_hyperbolic_lie_structure(n):
    # H^n with w = e^{r}: P = 0 and Q = 0, and grad w points against X_0
    m = 2.5
    qe = derive_structure(QEParameters(n, m, -(n + m - 1)), LieGeometry(hyperbolic_lie(n), np.eye(n)[0]))
    assert qe.rho == pytest.approx(-(n - 1))
    assert qe.kbar == pytest.approx(-1.0)
    assert hessian_residual(qe) <= 1e-14
    assert qe_residual(qe) <= 1e-14
    pq = build_pq(qe)
    assert np.abs(pq.P.components).max() <= 1e-14
    assert np.abs(pq.Q.components).max() <= 1e-14
    assert deriv_p_identity(qe) == 0.0


def test_pq_golden_matches_oracle(golden):
    pq = build_pq(golden)
    npt.assert_allclose(pq.P.components, GOLDEN_RIC + 2.4 * np.eye(4), atol=1e-14)
    R = curvature(golden.geometry.algebra).R.components
    Q = q_oracle(R, GOLDEN_RIC + 2.4 * np.eye(4), 4, 2.0, -6.0, -2.4)
    npt.assert_allclose(pq.Q.components, Q, atol=1e-13)
    eig = np.sort(np.linalg.eigvalsh(pq.P.components))
    expected = np.sort([0.0, -3.6, -1.2 + 1.2 * math.sqrt(2), -1.2 - 1.2 * math.sqrt(2)])
    npt.assert_allclose(eig, expected, atol=1e-13)


def test_pq_zero_p_gives_shifted_riemann():
    row = catalog(4, 2.0)[9]
    qe = structure_from_row(row)
    for point, pq in pq_points(qe):
        assert np.abs(pq.P.components).max() <= 1e-12
        npt.assert_allclose(pq.Q.components,
                            q_oracle(point.R.components, np.zeros((4, 4)), 4, 2.0, qe.lam, qe.rho), atol=1e-12)


@pytest.mark.parametrize("row", list(all_catalog_structures()), ids=lambda r: f"row{r.index}-n{r.n}-m{r.m}")
def test_catalog_identities(row):
    qe = structure_from_row(row)
    assert qe.rho == pytest.approx(row.rho, abs=1e-12)
    assert qe.mu == pytest.approx(row.mu, abs=1e-12)
    for _, pq in pq_points(qe):
        assert trace_p_defect(qe, pq) <= 1e-12
        assert q_trace_check(pq.Q, pq.P, qe.n, qe.m) <= 1e-12
    assert max(csw_identity_suite(qe)) <= 1e-10
    assert radial_q_flatness(qe) <= 1e-10
    assert radial_curvature_defect(qe) <= 1e-10
    assert scalar_bound_violation(qe) == 0.0
    assert rigidity_certificate(qe).verdict == "rigid"
    if row.lam < 0:
        assert rho_range_violation(qe) == 0.0


@pytest.mark.parametrize("row", rigid_products(2.0), ids=lambda r: r.name)
def test_rigid_products(row):
    qe = structure_from_row(row)
    assert qe.rho == 0.0
    pq = build_pq(qe)
    npt.assert_allclose(np.diag(pq.P.components), [0.0, row.lam, row.lam], atol=1e-14)
    assert max(csw_identity_suite(qe)) <= 1e-12
    assert radial_q_flatness(qe) <= 1e-12
    assert radial_curvature_defect(qe) <= 1e-12
    assert dim3_spectrum_defect(qe) <= 1e-12
    assert p_quadratic_residual(pq, qe.lam, qe.rho) <= 1e-12
    assert rigidity_certificate(qe).verdict == "rigid"


def test_csw_golden(golden):
    assert max(csw_identity_suite(golden)) < 1e-12


def test_csw_corrupted_lambda(golden):
    bad = derive_structure(QEParameters(4, 2.0, -5.0), golden.geometry)
    res = csw_identity_suite(bad)
    assert res.norm_identity > 0.1
    assert hessian_residual(bad) > 0.1


@pytest.mark.parametrize(
    "trP,m,rho,expected",
    [
        (0.0, 2.0, 1.0, (0.0, 0.0)),
        (-8.0, 2.0, 0.0, (-4.0, -4.0)),
        (4.0, 2.0, 1.0, (2 - math.sqrt(2), 2 + math.sqrt(2))),
    ],
)
def test_dim3_p12(trP, m, rho, expected):
    assert dim3_p12(trP, m, rho) == pytest.approx(expected, abs=1e-15)


def test_dim3_p12_infeasible():
    with pytest.raises(InfeasibleError):
        dim3_p12(4.0, 2.0, -1.0)
    assert dim3_p12(1e-13, 1.0, -1e-1) == pytest.approx((5e-14, 5e-14), abs=1e-12)


def test_radial_q_golden_is_not_flat(golden):
    # independent value: build Q by hand and contract with the unit gradient direction -X_0
    R = curvature(golden.geometry.algebra).R.components
    Q = q_oracle(R, GOLDEN_RIC + 2.4 * np.eye(4), 4, 2.0, -6.0, -2.4)
    expected = np.abs(Q[0, :, :, 0]).max()
    assert expected == pytest.approx(0.2, abs=1e-12)
    assert radial_q_flatness(golden) == pytest.approx(expected, abs=1e-13)


def test_radial_q_rigid_locus(rigid):
    assert radial_q_flatness(rigid) <= 1e-12
    assert radial_curvature_defect(rigid) <= 1e-12


def test_radial_q_needs_gradient():
    qe = derive_structure(QEParameters(3, 2.0, 0.0), LieGeometry(LieAlgebraMetric(np.zeros((3, 3, 3))), [1, 0, 0]))
    with pytest.raises(Exception, match="vanishes"):
        radial_q_flatness(qe)


def test_p_quadratic():
    lam, rho = -4.0, -1.0
    assert p_quadratic_residual(PQTensors(SymTensor2.zeros(3), CurvTensor4.zeros(3)), lam, rho) == 0.0
    P = SymTensor2.diag([0.0, lam - rho, lam - rho])
    assert p_quadratic_residual(PQTensors(P, CurvTensor4.zeros(3)), lam, rho) == 0.0


def test_p_quadratic_golden(golden):
    P = GOLDEN_RIC + 2.4 * np.eye(4)
    expected = np.abs(P @ (P + 3.6 * np.eye(4))).max()
    assert p_quadratic_residual(build_pq(golden), -6.0, -2.4) == pytest.approx(expected, abs=1e-12)
    assert expected > 1.0


def test_deriv_p_golden(golden):
    assert deriv_p_identity(golden) < 1e-11


def test_deriv_p_left_side_alone(golden):
    pq = build_pq(golden)
    zero_q = PQTensors(pq.P, CurvTensor4.zeros(4))
    assert deriv_p_identity(golden, zero_q) > 0.1


def test_deriv_p_rejects_warped_and_flat():
    with pytest.raises(InputError):
        deriv_p_identity(structure_from_row(catalog(3, 2.0)[5]))
    flat = derive_structure(QEParameters(3, 2.0, 0.0), LieGeometry(LieAlgebraMetric(np.zeros((3, 3, 3))), [1, 0, 0]))
    with pytest.raises(InputError, match="kbar"):
        deriv_p_identity(flat)


def test_rigidity_golden(golden):
    rep = rigidity_certificate(golden)
    assert rep.verdict == "non_rigid"
    expected = np.sort([-6.0, -2.4, -3.6 + 1.2 * math.sqrt(2), -3.6 - 1.2 * math.sqrt(2)])
    npt.assert_allclose(rep.ric_eigenvalues.eigenvalues, expected, atol=1e-13)


def test_rigidity_locus(rigid):
    rep = rigidity_certificate(rigid)
    assert rep.verdict == "rigid"
    npt.assert_allclose(rep.ric_eigenvalues.eigenvalues, [-4, -4, -1, -1], atol=1e-12)
    assert max(rep.integrability_defects.values()) <= 1e-14


def test_rigidity_gap_is_inconclusive(golden):
    assert rigidity_certificate(golden, accept=1e-20, reject=10.0).verdict == "inconclusive"


def test_rigidity_dim3_pair():
    row = rigid_products(2.0)[2]
    rep = rigidity_certificate(structure_from_row(row))
    assert rep.dim3_p12 == pytest.approx((row.lam, row.lam))


def test_scalar_bounds_and_rho_range(golden, rigid):
    for qe in (golden, rigid):
        assert scalar_bound_violation(qe) == 0.0
        assert rho_range_violation(qe) == 0.0
        assert qe.lam < qe.rho < 0


def test_radial_q_regression_guard(rigid):
    # [X_0, X_1] += 0.1 X_2 keeps Jacobi but destroys radial flatness on the rigid locus
    from qem.solvable_family import perturb

    L = perturb(rigid.geometry.algebra, (0, 1, 2), 0.1)
    qe = derive_structure(QEParameters(4, 3.0, rigid.lam), LieGeometry(L, rigid.geometry.radial))
    assert radial_q_flatness(qe) > 1e-3
    # regression pin for this exact perturbation
    assert radial_q_flatness(qe) == pytest.approx(0.075, abs=1e-12)
