"""Max-SIR coverage probability of a K-tier network.

With every threshold above 1 at most one BS can exceed its threshold, so
coverage is the sum over tiers of E[sum_x prod_{y != x} v_{k,tier(y)}(x, y)]
under Rayleigh fading.  Each per-tier term is a sum-product functional of
the serving tier multiplied by the PGFLs of the other tiers.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .functionals import (
    cluster_exponent, excursion_constant, interaction, interference_pgfl, offset_support,
    sum_product_pcp, sum_product_ppp,
)
from .geometry import Matern, NetworkModel
from .quadrature import INNER, OUTER, QuadratureSpec, QuadratureWarning, integrate_finite

__all__ = [
    "Method", "CoverageEstimate", "ThresholdError",
    "per_tier_coverage_ppp", "per_tier_coverage_pcp", "tier0_coverage",
    "total_coverage", "baseline_closed_form", "check_thresholds",
]


class ThresholdError(ValueError):
    """Raised when a threshold is at most 1 (0 dB), where tier terms overlap."""


class Method(str, Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "monte_carlo"


@dataclass
class CoverageEstimate:
    total: float
    per_tier: dict
    method: Method
    half_width: float | None = None
    meta: dict = field(default_factory=dict)
    degraded: bool = False

    def interval(self):
        if self.half_width is None:
            return (self.total, self.total)
        return (self.total - self.half_width, self.total + self.half_width)


def check_thresholds(model: NetworkModel):
    for t in model.tiers:
        if not t.threshold > 1:
            raise ThresholdError(
                f"tier {t.id}: threshold {t.threshold:g} must exceed 1 (0 dB) "
                "for the per-tier decomposition")


# running PGFL products below this are treated as 0 and not refined further
_NEGLIGIBLE = 1e-100


def _others_pgfl(model: NetworkModel, serving: int, x, spec, skip=()):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    ids = [j for j in model.all_ids if j not in skip]
    # closed-form PPP factors first: they zero out far nodes cheaply
    ids.sort(key=lambda j: 0 if j != 0 and model.tier(j).is_ppp else 1)
    for j in ids:
        live = out > _NEGLIGIBLE
        vals = np.zeros_like(x)
        if np.any(live):
            vals[live] = interference_pgfl(model, j, serving, x[live], spec)
        out = out * vals
    return out


def _outer_scale(model: NetworkModel, serving: int) -> float:
    """Distance at which the PPP-equivalent interference PGFL drops to 1/e."""
    c = excursion_constant(model.alpha)
    s = 0.0
    for t in model.tiers:
        a = interaction(model, serving, t.id).a
        s += t.mean_intensity * a ** (2.0 / model.alpha)
    return 1.0 / np.sqrt(np.pi * c * s)


def per_tier_coverage_ppp(model: NetworkModel, k: int, spec: QuadratureSpec = OUTER,
                          inner: QuadratureSpec = INNER) -> float:
    """2 pi lambda_k int x prod_j G_j(v_{k,j}(x, .)) dx for a PPP tier k."""
    tier = model.tier(k)
    if not tier.is_ppp:
        raise ValueError(f"tier {k} is not a PPP")
    pgfl = lambda x: _others_pgfl(model, k, x, inner)
    return float(sum_product_ppp(lambda x: 1.0, tier.process.intensity, interaction(model, k, k),
                                 spec, inner, scale=_outer_scale(model, k), pgfl=pgfl))


def per_tier_coverage_pcp(model: NetworkModel, k: int, spec: QuadratureSpec = OUTER,
                          inner: QuadratureSpec = INNER) -> float:
    """Sum-product over PCP tier k with the other tiers' PGFLs as weight."""
    tier = model.tier(k)
    if tier.is_ppp:
        raise ValueError(f"tier {k} is not a PCP")
    p = tier.process
    inter = interaction(model, k, k)
    g = lambda x: _others_pgfl(model, k, x, inner, skip=(k,))
    own = lambda x: interference_pgfl(model, k, k, x, inner)
    scale = _outer_scale(model, k) + p.kernel.scale
    return float(sum_product_pcp(g, p.parent_intensity, p.mean_cluster_size, p.kernel, inter,
                                 spec, inner, scale=scale, pgfl=own))


def _geometric_edges(first: float, last: float, ratio: float = 4.0) -> np.ndarray:
    edges = [0.0]
    e = first
    while e < last:
        edges.append(e)
        e *= ratio
    edges.append(last)
    return np.array(edges)


def _integrate_from_origin(f, last: float, first: float, spec: QuadratureSpec) -> float:
    """Integral over [0, last] split at first * 4^k.

    A wide kernel makes ``last`` far larger than the scale on which the
    other tiers' PGFLs vanish; a single panel would then miss the integrand.
    """
    edges = _geometric_edges(first, last)
    return float(np.sum(integrate_finite(f, edges[:-1], edges[1:], spec).value))


def tier0_coverage(model: NetworkModel, spec: QuadratureSpec = OUTER,
                   inner: QuadratureSpec = INNER) -> float:
    """Coverage contributed by the BSs sharing the typical user's cluster."""
    t0 = model.tier0
    if t0 is None:
        return 0.0
    kern = t0.kernel
    upper = offset_support(kern)
    g = lambda x: _others_pgfl(model, 0, x, inner, skip=(0,))
    first = 0.25 * _outer_scale(model, 0)
    if t0.case == 2:
        f = lambda z: g(z) * kern.offset_density(z)
        return _integrate_from_origin(f, upper, first, spec)

    # Case 3: sum-product over the cluster at z0, averaged over z0.  The
    # order is swapped (x outer) so the other tiers' PGFLs are evaluated
    # once per x node.  A Poisson(m) cluster weighs a point at x by
    # m exp(-m T); the size-biased law 1 + Poisson(m) by
    # exp(-m T) (m (1 - T) + 1), as in sum_product_offspring.
    m = t0.mean_cluster_size
    inter = interaction(model, 0, 0)

    def count_weight(t):
        if t0.size_biased:
            return np.exp(-m * t) * (m * (1.0 - t) + 1.0)
        return m * np.exp(-m * t)

    def weight(x):
        xe = x[..., None]

        def h(z):
            t = cluster_exponent(kern, inter, xe, z, inner)
            return count_weight(t) * kern.radial_density(xe, z) * kern.offset_density(z)

        total = 0.0
        for lo, hi, smooth in kern.support_pieces(x):
            lo, hi = np.minimum(lo, upper), np.minimum(hi, upper)
            total = total + integrate_finite(h, lo, hi, inner, smooth_endpoints=smooth).value
        return total

    def f(x):
        out = g(x)
        live = out > 0
        if np.any(live):
            out[live] *= weight(x[live])
        return out

    x_max = upper + (kern.radius if isinstance(kern, Matern) else offset_support(kern))
    return _integrate_from_origin(f, x_max, first, spec)


def baseline_closed_form(model: NetworkModel) -> float:
    """Coverage of the all-PPP limit; PCP tiers enter with intensity lambda_p m."""
    check_thresholds(model)
    d = 2.0 / model.alpha
    num = sum(t.mean_intensity * t.power**d * t.threshold ** (-d) for t in model.tiers)
    den = sum(t.mean_intensity * t.power**d for t in model.tiers)
    if den == 0:
        return 0.0
    return num / den / excursion_constant(model.alpha)


def total_coverage(model: NetworkModel, spec: QuadratureSpec = OUTER,
                   inner: QuadratureSpec = INNER) -> CoverageEstimate:
    """Analytic coverage with the per-tier breakdown (tier 0 included when present).

    Missed quadrature tolerances do not abort: the estimate is returned with
    ``degraded=True`` and the warnings listed in ``meta``.
    """
    check_thresholds(model)
    per_tier = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        if model.tier0 is not None:
            per_tier[0] = tier0_coverage(model, spec, inner)
        for t in model.tiers:
            if t.mean_intensity == 0:
                per_tier[t.id] = 0.0
            elif t.is_ppp:
                per_tier[t.id] = per_tier_coverage_ppp(model, t.id, spec, inner)
            else:
                per_tier[t.id] = per_tier_coverage_pcp(model, t.id, spec, inner)
    quad_warnings = [str(w.message) for w in caught if issubclass(w.category, QuadratureWarning)]
    for w in caught:
        if not issubclass(w.category, QuadratureWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    meta = {"rel_tol": spec.rel_tol, "abs_tol": spec.abs_tol,
            "inner_rel_tol": inner.rel_tol, "inner_abs_tol": inner.abs_tol}
    if quad_warnings:
        meta["quadrature_warnings"] = len(quad_warnings)
    return CoverageEstimate(float(sum(per_tier.values())), per_tier, Method.ANALYTIC,
                            meta=meta, degraded=bool(quad_warnings))
