import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qem.errors import DomainError, InputError
from qem.tensor_core import bianchi_residual, ricci_contraction
from qem.warped_geometry import (
    PROFILE_KINDS,
    ProfileFunction,
    WarpedProductModel,
    catalog,
    classify_w,
    hessian_at,
    mu_bar_at,
    qe_residual_at,
    ricci_at,
    riemann_at,
    scal_at,
)

# (lam, rho, mu) as functions of (n, m), read off the table of Einstein examples
TABLE = {
    1: lambda n, m: (m, 0, m - 1),
    2: lambda n, m: (0, 0, m - 1),
    3: lambda n, m: (-m, 0, m - 1),
    4: lambda n, m: (-m, 0, 0),
    5: lambda n, m: (-m, 0, -(m - 1)),
    6: lambda n, m: (n + m - 1, n - 1, m - 1),
    7: lambda n, m: (0, 0, m - 1),
    8: lambda n, m: (-(n + m - 1), -(n - 1), m - 1),
    9: lambda n, m: (-(n + m - 1), -(n - 1), 0),
    10: lambda n, m: (-(n + m - 1), -(n - 1), -(m - 1)),
}

PROFILES = [ProfileFunction(k, a, s) for k in PROFILE_KINDS for a, s in [(1.0, 1.0), (0.7, 1.3)]]


@pytest.mark.parametrize("p", PROFILES, ids=lambda p: f"{p.kind}-{p.amplitude}")
@settings(max_examples=30, deadline=None)
@given(r=st.floats(0.2, 1.2))
def test_profile_derivatives_match_finite_differences(p, r):
    h = 1e-5
    for order in (1, 2, 3):
        fd = (p.derivative(r + h, order - 1) - p.derivative(r - h, order - 1)) / (2 * h)
        assert p.derivative(r, order) == pytest.approx(fd, rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("p", PROFILES, ids=lambda p: f"{p.kind}-{p.amplitude}")
def test_profile_closed_forms(p):
    r = 0.37
    f = {
        "constant": lambda x: 1.0,
        "linear": lambda x: x,
        "exp": math.exp,
        "sin": math.sin,
        "cos": math.cos,
        "sinh": math.sinh,
        "cosh": math.cosh,
    }[p.kind]
    assert p.derivative(r, 0) == pytest.approx(p.amplitude * f(p.frequency * r), rel=1e-15)
    c = p.second_derivative_ratio()
    if c is not None:
        v, d1, d2 = p.evaluate(r)
        assert d2 == pytest.approx(c * v, rel=1e-15)
        assert d1**2 - c * v**2 == pytest.approx(p.first_integral(), rel=1e-13, abs=1e-13)


def test_profile_rejects_unknown_kind():
    with pytest.raises(InputError):
        ProfileFunction("tan")


def cone(a, f):
    return WarpedProductModel((0.0, None), f, f - 1.0, ProfileFunction("linear", a))


def test_flat_cone_is_flat():
    model = cone(1.0, 3)
    for r in (0.1, 1.0, 2.5):
        assert np.abs(riemann_at(model, r).components).max() <= 1e-14


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_cone_curvature(a):
    # g = dr^2 + a^2 r^2 g_{S^2}: fiber planes have curvature (1 - a^2)/(a^2 r^2), radial planes are flat
    model = cone(a, 2)
    r = 0.8
    ric = ricci_at(model, r).components
    npt.assert_allclose(np.diag(ric), [0.0] + 2 * [(1 - a * a) / (a * a * r * r)], rtol=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize(
    "profile,rho_n,sec",
    [("sin", 1.0, 1.0), ("sinh", 1.0, -1.0), ("exp", 0.0, -1.0), ("cosh", -1.0, -1.0)],
)
def test_space_forms(n, profile, rho_n, sec):
    f = n - 1
    model = WarpedProductModel((0.0, 1.5), f, rho_n * (f - 1), ProfileFunction(profile))
    for r in (0.05, 0.7, 1.4):
        npt.assert_allclose(ricci_at(model, r).components, sec * (n - 1) * np.eye(n), atol=1e-12)
        R = riemann_at(model, r)
        assert bianchi_residual(R.components) <= 1e-12
        npt.assert_allclose(ricci_contraction(R).components, ricci_at(model, r).components, atol=1e-12)


def test_product_factor_blocks():
    model = WarpedProductModel((None, None), 0, 0.0, ProfileFunction("constant"), factor_dim=2,
                               factor_einstein_constant=-3.0)
    npt.assert_allclose(ricci_at(model, 0.3).components, np.diag([0.0, -3.0, -3.0]))
    assert scal_at(model, 0.3) == -6.0


def test_hessian_of_distance_on_sphere():
    # w = cos r on the unit sphere has Hess w = -w g
    model = WarpedProductModel((0.0, math.pi / 2), 2, 1.0, ProfileFunction("sin"))
    w = ProfileFunction("cos")
    r = 0.6
    npt.assert_allclose(hessian_at(model, w, r).components, -math.cos(r) * np.eye(3), atol=1e-15)


def test_domain_errors():
    model = WarpedProductModel((0.0, 1.0), 2, 1.0, ProfileFunction("sin"))
    with pytest.raises(DomainError):
        ricci_at(model, 1.5)
    with pytest.raises(DomainError):
        qe_residual_at(model, ProfileFunction("cos", -1.0), 3, 2.0, 4.0, 0.5)
    with pytest.raises(InputError):
        WarpedProductModel((1.0, 0.0), 2, 1.0, ProfileFunction("sin"))
    with pytest.raises(InputError):
        WarpedProductModel((0.0, 1.0), 1, 1.0, ProfileFunction("sin"))


@pytest.mark.parametrize("interval", [(0.0, 1.0), (0.0, None), (None, 2.0), (None, None)])
def test_samples_are_interior(interval):
    model = WarpedProductModel(interval, 0, 0.0, ProfileFunction("constant"))
    rs = model.samples(20)
    assert len(rs) == 20
    assert all(model.contains(r) for r in rs)
    with pytest.raises(InputError):
        model.samples(0)


@pytest.mark.parametrize(
    "kbar,mubar,expected",
    [
        (1.0, 1.0, "cos"),
        (1.0, 0.0, "infeasible"),
        (1.0, -2.0, "infeasible"),
        (0.0, 1.0, "linear"),
        (0.0, 0.0, "constant"),
        (0.0, -1.0, "infeasible"),
        (-1.0, 0.0, "exp"),
        (-1.0, 1.0, "sinh"),
        (-1.0, -1.0, "cosh"),
    ],
)
def test_classify_w(kbar, mubar, expected):
    assert classify_w(kbar, mubar) == expected


def test_classify_w_tolerance():
    assert classify_w(-1.0, 1e-15, atol=1e-12) == "exp"


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 7.0])
def test_catalog_rows(n, m):
    rows = catalog(n, m)
    assert [r.index for r in rows] == list(range(1, 11))
    for row in rows:
        assert (row.lam, row.rho, row.mu) == pytest.approx(TABLE[row.index](row.n, m))
        assert row.n == (1 if row.index <= 5 else n)
        kbar = (row.lam - row.rho) / m
        mus = [mu_bar_at(row.w, kbar, r) for r in row.model.samples(20)]
        assert max(mus) - min(mus) <= 1e-12
        assert (m - 1) * mus[0] == pytest.approx(row.mu, abs=1e-12)
        assert max(qe_residual_at(row.model, row.w, row.n, m, row.lam, r) for r in row.model.samples(20)) < 1e-9


def test_catalog_classify_matches_w():
    names = {"cos": "cos", "linear": "linear", "exp": "exp", "sinh": "sinh", "cosh": "cosh"}
    for row in catalog(3, 2.0):
        kbar = (row.lam - row.rho) / row.m
        mubar = row.mu / (row.m - 1)
        assert classify_w(kbar, mubar, atol=1e-12) == names[row.w.kind]


def test_catalog_rejects_small_n():
    with pytest.raises(InputError):
        catalog(1, 2.0)
