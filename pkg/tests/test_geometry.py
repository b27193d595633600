import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from hetnet_pcp.geometry import (
    PCP, PPP, ConfigurationError, Matern, NetworkModel, Thomas, TierSpec, UserPlacement,
    radial_conditional_density, sample_network, sample_pcp, sample_ppp, sample_typical_cluster,
)


def two_tier(users=UserPlacement.uniform(), second=None):
    second = second or PPP(1e-4)
    return NetworkModel((TierSpec(1, PPP(1e-6), 1000.0, 5.0), TierSpec(2, second, 1.0, 5.0)),
                        4.0, users)


# -- densities ---------------------------------------------------------------

def test_matern_inner_region_value():
    assert radial_conditional_density(Matern(1.0), 0.2, 0.3) == pytest.approx(0.4)


def test_thomas_at_zero_is_rayleigh():
    s = 7.0
    x = np.linspace(0, 50, 11)
    ray = x / s**2 * np.exp(-x * x / (2 * s * s))
    np.testing.assert_allclose(radial_conditional_density(Thomas(s), x, 0.0), ray, rtol=1e-12)


def test_thomas_no_overflow_far_out():
    # x z / sigma^2 ~ 1e6 would overflow a plain I0
    val = radial_conditional_density(Thomas(1.0), 1000.0, 1000.5)
    assert np.isfinite(val) and val > 0


def test_matern_arccos_boundary_is_finite():
    k = Matern(1.0)
    vals = k.radial_density(np.array([0.5, 1.5, 0.5 + 1e-15]), 0.5)
    assert np.all(np.isfinite(vals)) and np.all(vals >= 0)


def test_negative_arguments_rejected():
    with pytest.raises(ValueError):
        radial_conditional_density(Matern(1.0), -1.0, 0.5)
    with pytest.raises(ValueError):
        radial_conditional_density(Thomas(1.0), 1.0, -0.5)


def _normalization(kernel, z):
    # independent oracle: scipy quad over the support, split at the kinks
    f = lambda x: float(kernel.radial_density(x, z))
    total = 0.0
    for lo, hi, _ in kernel.support_pieces(z):
        lo, hi = float(lo), float(hi)
        if hi > lo:
            total += integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total


@pytest.mark.parametrize("kernel", [Matern(1.0), Matern(40.0), Thomas(1.0), Thomas(20.0)])
@pytest.mark.parametrize("zfac", [0.0, 0.3, 0.5, 0.999, 1.0, 1.7, 5.0, 40.0])
def test_normalization(kernel, zfac):
    assert _normalization(kernel, zfac * kernel.scale) == pytest.approx(1.0, abs=1e-8)


@given(z=st.floats(0, 10), radius=st.floats(0.1, 5))
def test_matern_normalization_property(z, radius):
    assert _normalization(Matern(radius), z) == pytest.approx(1.0, abs=1e-8)


@given(z=st.floats(0, 30), sigma=st.floats(0.1, 5))
def test_thomas_normalization_property(z, sigma):
    assert _normalization(Thomas(sigma), z) == pytest.approx(1.0, abs=1e-8)


def _radial_cdf(kernel, z):
    lo = min(float(p[0]) for p in kernel.support_pieces(z))
    hi = max(float(p[1]) for p in kernel.support_pieces(z))
    grid = np.linspace(lo, hi, 200_001)
    cdf = integrate.cumulative_trapezoid(kernel.radial_density(grid, z), grid, initial=0.0)
    return lambda x: np.interp(x, grid, cdf / cdf[-1])


@pytest.mark.parametrize("kernel,z", [(Matern(1.0), 0.4), (Matern(1.0), 2.5), (Thomas(1.0), 0.0),
                                      (Thomas(1.0), 3.0)])
def test_sampled_distances_match_density(kernel, z, rng):
    pts = np.array([z, 0.0]) + kernel.sample_offsets(rng, 100_000)
    d = np.hypot(pts[:, 0], pts[:, 1])
    ks = stats.kstest(d, _radial_cdf(kernel, z)).statistic
    assert ks < 0.01


# -- samplers ----------------------------------------------------------------

def test_ppp_zero_intensity(rng):
    assert len(sample_ppp(0.0, 100.0, rng)) == 0


def test_ppp_mean_count(rng):
    counts = np.array([len(sample_ppp(1e-6, 10_000.0, rng)) for _ in range(10_000)])
    mean = np.pi * 100
    assert abs(counts.mean() - mean) <= 3 * np.sqrt(mean / counts.size)


def test_ppp_support(rng):
    pts = sample_ppp(1e-3, 300.0, rng)
    assert len(pts) > 0
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 300.0)


def test_ppp_counts_are_poisson(rng):
    mean = 4.0
    radius = np.sqrt(mean / (np.pi * 1e-2))
    counts = np.array([len(sample_ppp(1e-2, radius, rng)) for _ in range(10_000)])
    edges = np.arange(0, 12)
    observed = np.array([np.sum(counts == k) for k in edges[:-1]] + [np.sum(counts >= 11)])
    probs = np.append(stats.poisson.pmf(edges[:-1], mean), stats.poisson.sf(10, mean))
    p = stats.chisquare(observed, probs * counts.size).pvalue
    assert p > 0.01


def test_ppp_rejects_bad_parameters(rng):
    with pytest.raises(ValueError):
        sample_ppp(-1.0, 10.0, rng)
    with pytest.raises(ValueError):
        sample_ppp(1.0, 0.0, rng)


def test_pcp_empty_clusters(rng):
    pts, par = sample_pcp(1e-4, 0.0, Matern(10.0), 500.0, rng)
    assert len(pts) == 0 and len(par) == 0


def test_pcp_matern_offspring_within_radius(rng):
    pts, par = sample_pcp(1e-5, 10.0, Matern(100.0), 2000.0, rng)
    assert len(pts) > 0
    assert np.all(np.hypot(*(pts - par).T) <= 100.0 + 1e-9)
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 2000.0)


def test_pcp_intensity(rng):
    w = 10_000.0
    counts = np.array([len(sample_pcp(1e-6, 10.0, Matern(100.0), w, rng)[0]) for _ in range(1000)])
    area = np.pi * w * w
    intensity = counts.mean() / area
    # clustered counts: variance is inflated by the cluster size, use the empirical spread
    se = counts.std(ddof=1) / np.sqrt(counts.size) / area
    assert abs(intensity - 1e-5) <= 3 * se


def test_typical_cluster_case1(rng):
    assert len(sample_typical_cluster(two_tier(), rng)) == 0


def test_typical_cluster_case2_radial_law(rng):
    model = two_tier(UserPlacement.around_ppp(2, Matern(50.0)))
    z = np.array([sample_typical_cluster(model, rng)[0] for _ in range(20_000)])
    assert z.shape == (20_000, 2)
    d = np.hypot(z[:, 0], z[:, 1])
    assert d.max() <= 50.0
    assert stats.kstest(d, lambda s: np.clip(s / 50.0, 0, 1) ** 2).statistic < 0.015
    # direction uniform
    theta = np.mod(np.arctan2(z[:, 1], z[:, 0]), 2 * np.pi)
    assert stats.kstest(theta, stats.uniform(0, 2 * np.pi).cdf).pvalue > 0.001


def test_typical_cluster_case3_mean_count(rng):
    model = two_tier(UserPlacement.with_pcp(2), PCP(1e-5, 5.0, Matern(60.0)))
    n = np.array([len(sample_typical_cluster(model, rng)) for _ in range(20_000)])
    assert abs(n.mean() - 5.0) <= 3 * np.sqrt(5.0 / n.size)


def test_typical_cluster_size_biased_count(rng):
    model = two_tier(UserPlacement.with_pcp(2, size_biased=True), PCP(1e-5, 5.0, Matern(60.0)))
    n = np.array([len(sample_typical_cluster(model, rng)) for _ in range(20_000)])
    assert n.min() >= 1
    assert abs(n.mean() - 6.0) <= 3 * np.sqrt(5.0 / n.size)


def test_sample_network_labels(rng):
    model = two_tier(UserPlacement.with_pcp(2), PCP(1e-5, 5.0, Thomas(30.0)))
    pat = sample_network(model, 2000.0, rng)
    assert set(np.unique(pat.tiers)) <= {0, 1, 2}
    pcp = pat.tiers == 2
    assert np.all(np.isfinite(pat.parents[pcp]))
    assert np.all(np.isnan(pat.parents[pat.tiers == 1]))
    np.testing.assert_array_equal(pat.typical_user, [0.0, 0.0])


# -- validation --------------------------------------------------------------

def test_model_validation():
    ppp = TierSpec(1, PPP(1e-6), 1.0, 5.0)
    with pytest.raises(ConfigurationError):
        NetworkModel((ppp, TierSpec(1, PPP(1e-6), 1.0, 5.0)), 4.0)
    with pytest.raises(ConfigurationError):
        NetworkModel((ppp,), 2.0)
    with pytest.raises(ConfigurationError):
        NetworkModel((ppp,), 4.0, UserPlacement.around_ppp(3, Matern(10.0)))
    with pytest.raises(ConfigurationError):
        NetworkModel((ppp,), 4.0, UserPlacement.with_pcp(1))
    with pytest.raises(ConfigurationError):
        UserPlacement(2, anchor=1)
    with pytest.raises(ConfigurationError):
        TierSpec(1, PPP(1e-6), 0.0, 5.0)
    with pytest.raises(ConfigurationError):
        TierSpec(0, PPP(1e-6), 1.0, 5.0)


def test_case3_kernel_must_match_anchor():
    pcp = TierSpec(2, PCP(1e-5, 5.0, Matern(60.0)), 1.0, 5.0)
    with pytest.raises(ConfigurationError):
        NetworkModel((pcp,), 4.0, UserPlacement(3, anchor=2, kernel=Matern(30.0)))


def test_tier0_inherits_anchor_power_and_threshold():
    model = two_tier(UserPlacement.around_ppp(2, Matern(40.0)))
    assert model.power(0) == 1.0 and model.threshold(0) == 5.0
    assert model.all_ids == [0, 1, 2]


def test_scale_clusters_keeps_mean_intensity():
    model = two_tier(UserPlacement.with_pcp(2), PCP(1e-5, 5.0, Matern(60.0)))
    scaled = model.scale_clusters(3.0)
    assert scaled.tier(2).process.kernel == Matern(180.0)
    assert scaled.tier(2).mean_intensity == model.tier(2).mean_intensity
