import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hetnet_pcp import functionals as fn
from hetnet_pcp.functionals import (
    OutsideDisc, VFactor, cluster_exponent, excursion_constant, pgfl_cluster, pgfl_pcp,
    pgfl_phi0, pgfl_ppp, pgfl_ppp_closed, reduced_pgfl_cluster, sum_product_offspring,
    sum_product_pcp, sum_product_ppp, v_factor,
)
from hetnet_pcp.geometry import (
    PCP, PPP, Matern, NetworkModel, Thomas, TierSpec, UserPlacement, sample_pcp,
    sample_typical_cluster,
)
from hetnet_pcp.quadrature import QuadratureSpec

ONE = VFactor(0.0, 4.0)   # v == 1


def pair(beta=2.0, p1=1.0, p2=1.0):
    return NetworkModel((TierSpec(1, PPP(1e-6), p1, beta), TierSpec(2, PPP(1e-6), p2, beta)), 4.0)


# -- v ----------------------------------------------------------------------

def test_v_equal_powers():
    assert v_factor(1, 2, 30.0, 30.0, pair(beta=2.0)) == pytest.approx(1 / 3)


def test_v_at_zero_distance():
    assert v_factor(1, 2, 0.0, 10.0, pair()) == 1.0


def test_v_power_ratio():
    assert v_factor(1, 2, 2.0, 1.0, pair(10.0, 1000.0, 1.0)) == pytest.approx(1 / 1.16)


def test_v_interferer_on_user():
    with pytest.warns(RuntimeWarning):
        assert v_factor(1, 2, 5.0, 0.0, pair()) == 0.0


@given(a=st.floats(1e-4, 1e4), x=st.floats(0, 1e4), y=st.floats(1e-3, 1e5))
def test_v_in_unit_interval(a, x, y):
    v = VFactor(a, 4.0)(x, y)
    assert 0.0 < v <= 1.0 or (v == 0.0 and x > 0)
    assert v + VFactor(a, 4.0).complement(x, y) == pytest.approx(1.0)


# -- PPP --------------------------------------------------------------------

def test_excursion_constant_alpha4():
    assert excursion_constant(4.0) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 5.5])
def test_excursion_constant_matches_quadrature(alpha):
    # int_0^inf (1 - 1/(1 + y^-alpha)) 2y dy = C for x = 1, a = 1
    val = integrate.quad(lambda y: 2 * y / (1 + y**alpha), 0, np.inf, epsabs=1e-12, limit=400)[0]
    assert val == pytest.approx(excursion_constant(alpha), rel=1e-8)


def test_ppp_closed_at_origin():
    assert pgfl_ppp_closed(1e-3, 5.0, 4.0, 0.0) == 1.0


def test_ppp_closed_example_and_quadrature_agree():
    closed = pgfl_ppp_closed(1 / math.pi, 1.0, 4.0, 1.0)
    assert closed == pytest.approx(math.exp(-math.pi / 2))
    quad = pgfl_ppp(1 / math.pi, VFactor(1.0, 4.0), 1.0)
    assert quad == pytest.approx(closed, abs=1e-6)


@given(lam=st.floats(1e-7, 1e-3), a=st.floats(1e-3, 1e3), x=st.floats(0.1, 300),
       alpha=st.floats(2.5, 6))
def test_ppp_quadrature_matches_closed_form(lam, a, x, alpha):
    closed = pgfl_ppp_closed(lam, a, alpha, x)
    quad = pgfl_ppp(lam, VFactor(a, alpha), x)
    assert quad == pytest.approx(closed, rel=1e-6, abs=1e-12)


def test_ppp_void_probability():
    assert pgfl_ppp(1e-4, OutsideDisc(50.0), 1.0) == pytest.approx(math.exp(-1e-4 * math.pi * 2500))


@given(lam=st.floats(1e-7, 1e-4), a=st.floats(0.01, 100), x=st.floats(1, 500),
       f=st.floats(1.01, 3))
def test_ppp_closed_monotone(lam, a, x, f):
    g = pgfl_ppp_closed(lam, a, 4.0, x)
    assert 0 < g <= 1 or g == 0
    assert pgfl_ppp_closed(lam, a, 4.0, x * f) <= g
    assert pgfl_ppp_closed(lam * f, a, 4.0, x) <= g
    assert pgfl_ppp_closed(lam, a * f, 4.0, x) <= g


# -- clusters ---------------------------------------------------------------

def test_cluster_trivial_cases():
    k = Thomas(50.0)
    assert pgfl_cluster(k, 4.0, VFactor(1.0, 4.0), 0.0, 100.0) == pytest.approx(1.0)
    assert pgfl_cluster(k, 0.0, VFactor(1.0, 4.0), 150.0, 100.0) == 1.0


def test_reduced_palm_identity_is_one_code_path():
    assert reduced_pgfl_cluster is pgfl_cluster
    args = (Matern(40.0), 7.0, VFactor(3.0, 4.0), np.array([10.0, 80.0]), np.array([5.0, 60.0]))
    np.testing.assert_array_equal(reduced_pgfl_cluster(*args), pgfl_cluster(*args))


@pytest.mark.parametrize("kernel", [Matern(40.0), Thomas(20.0)])
def test_cluster_exponent_matches_2d_quadrature(kernel):
    # T(x, z) by brute-force planar integration over the offspring displacement
    inter = VFactor(2.0, 4.0)
    x, z = 30.0, 25.0
    if isinstance(kernel, Matern):
        r = kernel.radius
        dens = lambda s: 1 / (math.pi * r * r)
        smax = r
    else:
        s2 = kernel.sigma**2
        dens = lambda s: math.exp(-s * s / (2 * s2)) / (2 * math.pi * s2)
        smax = 8 * kernel.sigma

    def integrand(theta, s):
        y = math.hypot(z + s * math.cos(theta), s * math.sin(theta))
        return float(inter.complement(x, y)) * dens(s) * s

    ref = integrate.dblquad(integrand, 0, smax, 0, 2 * math.pi, epsabs=1e-12, epsrel=1e-10)[0]
    assert cluster_exponent(kernel, inter, x, z) == pytest.approx(ref, rel=1e-7)


def test_pgfl_cluster_thomas_monte_carlo(rng):
    kernel, m, z, x = Thomas(50.0), 4.0, 100.0, 150.0
    inter = VFactor(1.0, 4.0)
    n = 100_000
    counts = rng.poisson(m, n)
    pts = np.array([z, 0.0]) + kernel.sample_offsets(rng, int(counts.sum()))
    logv = np.log(inter(x, np.hypot(pts[:, 0], pts[:, 1])))
    prods = np.exp(np.bincount(np.repeat(np.arange(n), counts), weights=logv, minlength=n))
    se = prods.std(ddof=1) / math.sqrt(n)
    assert abs(prods.mean() - pgfl_cluster(kernel, m, inter, x, z)) <= 3 * se


def test_pcp_trivial_cases():
    inter = VFactor(1.0, 4.0)
    assert pgfl_pcp(1e-6, 10.0, Matern(100.0), inter, 0.0) == pytest.approx(1.0)
    assert pgfl_pcp(1e-6, 0.0, Matern(100.0), inter, 200.0) == 1.0


@pytest.mark.slow
def test_pgfl_pcp_matern_monte_carlo(rng):
    lp, m, kernel, x = 1e-6, 10.0, Matern(100.0), 200.0
    inter = VFactor(1.0, 4.0)
    window = 20_000.0
    vals = np.empty(10_000)
    for i in range(vals.size):
        pts, _ = sample_pcp(lp, m, kernel, window, rng)
        vals[i] = np.prod(inter(x, np.hypot(pts[:, 0], pts[:, 1])))
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - pgfl_pcp(lp, m, kernel, inter, x)) <= 3 * se


@given(x=st.floats(1, 2000), f=st.floats(1.05, 3), a=st.floats(0.05, 20),
       kernel=st.sampled_from([Matern(40.0), Thomas(20.0), Matern(200.0)]))
def test_pcp_monotone_and_bounded(x, f, a, kernel):
    lp, m = 1e-6, 10.0
    spec = QuadratureSpec(1e-9, 1e-13, strict=False)
    g = pgfl_pcp(lp, m, kernel, VFactor(a, 4.0), x, spec, spec)
    assert 0 <= g <= 1
    tol = 1e-7
    assert pgfl_pcp(lp, m, kernel, VFactor(a, 4.0), x * f, spec, spec) <= g + tol
    assert pgfl_pcp(lp * f, m, kernel, VFactor(a, 4.0), x, spec, spec) <= g + tol
    assert pgfl_pcp(lp, m, kernel, VFactor(a * f, 4.0), x, spec, spec) <= g + tol


def test_pcp_underflow_screen_is_exact():
    # far out the value is below the smallest double either way
    inter = VFactor(1.0, 4.0)
    assert pgfl_pcp(1e-5, 10.0, Matern(40.0), inter, 1e5) == 0.0
    assert pgfl_pcp(1e-5, 10.0, Matern(40.0), inter, 1e3) > 0.0


def test_pcp_tends_to_ppp_for_wide_clusters():
    lp, m, x = 1e-6, 10.0, 300.0
    inter = VFactor(1.0, 4.0)
    ppp = pgfl_ppp_closed(lp * m, 1.0, 4.0, x)
    far = pgfl_pcp(lp, m, Thomas(30_000.0), inter, x)
    assert far == pytest.approx(ppp, rel=2e-3)


# -- tier 0 -----------------------------------------------------------------

def case3(kernel=Matern(60.0), m=3.0, size_biased=False):
    tiers = (TierSpec(1, PPP(1e-6), 1000.0, 2.0), TierSpec(2, PCP(1e-5, m, kernel), 1.0, 2.0))
    return NetworkModel(tiers, 4.0, UserPlacement.with_pcp(2, size_biased))


def test_phi0_case1():
    assert pgfl_phi0(pair(), 1, 100.0) == 1.0


def test_phi0_case2_at_origin():
    model = NetworkModel(pair().tiers, 4.0, UserPlacement.around_ppp(2, Matern(40.0)))
    assert pgfl_phi0(model, 2, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("size_biased", [False, True])
def test_phi0_case3_monte_carlo(rng, size_biased):
    model = case3(size_biased=size_biased)
    inter = fn.interaction(model, 2, 0)
    x = 100.0
    vals = np.empty(100_000)
    for i in range(vals.size):
        pts = sample_typical_cluster(model, rng)
        vals[i] = np.prod(inter(x, np.hypot(pts[:, 0], pts[:, 1])))
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - pgfl_phi0(model, 2, x)) <= 3 * se


# -- sum-product functionals ------------------------------------------------

def test_sum_product_ppp_campbell():
    lam, r = 1e-4, 80.0
    val = sum_product_ppp(lambda x: (x <= r).astype(float), lam, ONE, x_max=r)
    assert val == pytest.approx(lam * math.pi * r * r, rel=1e-8)


def test_sum_product_zero_g():
    zero = lambda x: np.zeros_like(x)
    assert sum_product_ppp(zero, 1e-5, VFactor(5.0, 4.0)) == 0.0
    assert sum_product_pcp(zero, 1e-6, 5.0, Matern(80.0), VFactor(5.0, 4.0)) == 0.0


def test_sum_product_pcp_mean_measure():
    lp, m, r = 1e-5, 5.0, 150.0
    val = sum_product_pcp(lambda x: (x <= r).astype(float), lp, m, Matern(80.0), ONE, x_max=r)
    assert val == pytest.approx(lp * m * math.pi * r * r, rel=1e-6)


@pytest.mark.parametrize("kernel", [Matern(30.0), Thomas(15.0)])
def test_sum_product_offspring_counts(kernel):
    one = lambda x: np.ones_like(x)
    assert sum_product_offspring(one, kernel, 6.0, 50.0, ONE) == pytest.approx(7.0, rel=1e-7)
    assert sum_product_offspring(one, kernel, 0.0, 50.0, ONE) == pytest.approx(1.0, rel=1e-7)


@given(lam=st.floats(1e-7, 1e-4), a=st.floats(0.1, 50), s=st.floats(10, 500))
def test_sum_product_ppp_nonnegative(lam, a, s):
    val = sum_product_ppp(lambda x: np.exp(-(x / s) ** 2), lam, VFactor(a, 4.0))
    assert val >= 0
    # Campbell bound: v <= 1
    assert val <= lam * math.pi * s * s * (1 + 1e-6)
