"""Point-process functionals used by the max-SIR coverage analysis.

Every functional is reduced to radial integrals: the interaction ``v(x, y)``
and the weights ``g(x)`` only depend on distances to the origin, and the
angular part of a cluster's offspring law is folded into the kernel's
``radial_density``.  Functions accept numpy arrays of distances ``x`` and
evaluate all of them in one batched quadrature.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import PCP, PPP, ClusterKernel, Matern, NetworkModel, THOMAS_SUPPORT_SIGMAS
from .quadrature import INNER, OUTER, QuadratureSpec, integrate_finite, integrate_semi_infinite

__all__ = [
    "VFactor", "OutsideDisc", "interaction",
    "v_factor", "pgfl_ppp_closed", "pgfl_ppp", "pgfl_pcp", "pgfl_cluster",
    "reduced_pgfl_cluster", "pgfl_phi0", "cluster_exponent", "interference_pgfl",
    "sum_product_ppp", "sum_product_pcp", "sum_product_offspring",
    "excursion_constant", "offset_support", "integrate_over_support",
]


def excursion_constant(alpha: float) -> float:
    """(2 pi / alpha) / sin(2 pi / alpha); equals pi / 2 for alpha = 4."""
    d = 2.0 * np.pi / alpha
    return d / np.sin(d)


@dataclass(frozen=True)
class VFactor:
    """v(x, y) = 1 / (1 + a (x / y)^alpha) with a = beta_i P_j / P_i.

    ``a = 0`` gives v = 1 everywhere.
    """

    a: float
    alpha: float

    def __call__(self, x, y):
        return 1.0 - self.complement(x, y)

    def complement(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = self.a ** (1.0 / self.alpha) * x
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = (y / u) ** self.alpha
        t = np.where(u > 0, t, np.inf)
        return 1.0 / (1.0 + t)

    def reach(self, x):
        """Distance y at which v(x, y) = 1/2."""
        return self.a ** (1.0 / self.alpha) * np.asarray(x, dtype=float)

    def breakpoints(self, x):
        # the complement falls from ~1 to ~0 around y = reach(x)
        return (self.reach(x),)


@dataclass(frozen=True)
class OutsideDisc:
    """v(x, y) = 1{y >= radius}; turns a PGFL into a void probability of b(0, radius)."""

    radius: float

    def __call__(self, x, y):
        return 1.0 - self.complement(x, y)

    def complement(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (y < self.radius).astype(float)

    def reach(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.radius)

    def breakpoints(self, x):
        return (np.full_like(np.asarray(x, dtype=float), self.radius),)


def interaction(model: NetworkModel, serving: int, interferer: int) -> VFactor:
    """v_{k,j} for serving tier k and interfering tier j (0 allowed for either)."""
    a = model.threshold(serving) * model.power(interferer) / model.power(serving)
    return VFactor(a, model.alpha)


def v_factor(i: int, j: int, x, y, model: NetworkModel):
    """1 / (1 + beta_i (P_j / P_i) (x / y)^alpha).

    An interferer at y = 0 gives 0 and a RuntimeWarning: the continuous
    processes put a point there with probability zero.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        warnings.warn("interferer at the user location", RuntimeWarning, stacklevel=2)
    out = interaction(model, i, j)(x, y)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# helpers

def _positive_scale(s, fallback):
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, s, fallback)


def _cut(pieces, cuts):
    """Split (lo, hi, smooth) pieces at the given (broadcastable) cut points."""
    for c in cuts:
        out = []
        for lo, hi, smooth in pieces:
            m = np.clip(c, lo, hi)
            out.append((lo, m, smooth))
            out.append((m, hi, smooth))
        pieces = out
    return pieces


def integrate_over_support(kernel: ClusterKernel, w, f, spec: QuadratureSpec, cuts=()):
    """Integrate f over the support of kernel.radial_density in its free
    argument, with the other argument fixed at ``w``."""
    pieces = _cut(kernel.support_pieces(w), cuts)
    total = 0.0
    for lo, hi, smooth in pieces:
        total = total + integrate_finite(f, lo, hi, spec, smooth_endpoints=smooth).value
    return total


def offset_support(kernel: ClusterKernel) -> float:
    """Upper limit for integrals against the offset (cluster-centre) density."""
    if isinstance(kernel, Matern):
        return kernel.radius
    return THOMAS_SUPPORT_SIGMAS * kernel.sigma


# ---------------------------------------------------------------------------
# PGFLs

def cluster_exponent(kernel: ClusterKernel, inter, x, z, spec: QuadratureSpec = INNER):
    """T(x, z) = integral of (1 - v(x, y)) over the radial law of an
    offspring point whose cluster centre is at distance z."""
    x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
    xe = x[..., None]
    ze = z[..., None]

    def f(y):
        return inter.complement(xe, y) * kernel.radial_density(y, ze)

    cuts = [np.broadcast_to(c, x.shape) for c in inter.breakpoints(x)]
    return integrate_over_support(kernel, z, f, spec, cuts)


def pgfl_cluster(kernel: ClusterKernel, mean_cluster_size: float, inter, x, z,
                 spec: QuadratureSpec = INNER):
    """PGFL of one cluster z + B^z: exp(-m T(x, z)).

    The count is Poisson, so the same value is the PGFL under the reduced
    Palm distribution; see ``reduced_pgfl_cluster``.
    """
    if mean_cluster_size == 0:
        return np.ones(np.broadcast(np.asarray(x), np.asarray(z)).shape)
    return np.exp(-mean_cluster_size * cluster_exponent(kernel, inter, x, z, spec))


# Poisson cluster counts: removing the conditioning point leaves the law unchanged
reduced_pgfl_cluster = pgfl_cluster


def pgfl_ppp_closed(intensity: float, a: float, alpha: float, x):
    """exp(-pi lambda a^(2/alpha) x^2 C) for v = VFactor(a, alpha)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-np.pi * intensity * a ** (2.0 / alpha) * x * x * excursion_constant(alpha))


def pgfl_ppp(intensity: float, inter, x, spec: QuadratureSpec = INNER):
    """PPP PGFL by quadrature: exp(-2 pi lambda int (1 - v(x, y)) y dy)."""
    x = np.asarray(x, dtype=float)
    if intensity == 0:
        return np.ones_like(x)
    xe = x[..., None]
    scale = _positive_scale(inter.reach(x), 1.0)
    cuts = inter.breakpoints(x)
    f = lambda y: inter.complement(xe, y) * y
    if cuts and isinstance(inter, VFactor):
        (c,) = cuts
        c = _positive_scale(c, 1.0)
        head = integrate_finite(f, 0.0, c, spec).value
        # 1 - v ~ (c/y)^alpha: y = c u^-q with q = 2/(alpha - 2) leaves a
        # regular integrand on (0, 1] even for alpha close to 2
        q = 2.0 / (inter.alpha - 2.0)
        ce = c[..., None] if np.ndim(c) else c

        def g(u):
            with np.errstate(over="ignore", divide="ignore"):
                y = ce * u ** (-q)
                out = f(y) * q * y / u
            return np.where(np.isfinite(out), out, 0.0)

        tail = integrate_finite(g, np.zeros_like(x), np.ones_like(x), spec).value
        total = head + tail
    elif cuts:
        (c,) = cuts
        head = integrate_finite(f, 0.0, c, spec).value
        tail = integrate_semi_infinite(f, c, spec, scale=scale).value
        total = head + tail
    else:
        total = integrate_semi_infinite(f, 0.0, spec, scale=scale).value
    return np.exp(-2.0 * np.pi * intensity * total)


def _pcp_exponent_bound(parent_intensity, m, kernel, inter, x):
    """Lower bound on the PCP PGFL exponent for a VFactor interaction.

    Clusters centred within reach(x) - support hold every point at y < reach,
    where 1 - v >= 1/2, so T >= 1/2 there.
    """
    if not isinstance(inter, VFactor):
        return np.zeros_like(x)
    inside = np.maximum(inter.reach(x) - offset_support(kernel), 0.0)
    return np.pi * parent_intensity * -np.expm1(-0.5 * m) * inside**2


# exp(-_UNDERFLOW) is below the smallest positive double
_UNDERFLOW = 745.0


def pgfl_pcp(parent_intensity: float, mean_cluster_size: float, kernel: ClusterKernel,
             inter, x, spec: QuadratureSpec = INNER, inner: QuadratureSpec = INNER):
    """PCP PGFL: exp(-2 pi lambda_p int (1 - exp(-m T(x, z))) z dz).

    Distances where the value provably underflows return 0 without quadrature.
    """
    x = np.asarray(x, dtype=float)
    if parent_intensity == 0 or mean_cluster_size == 0:
        return np.ones_like(x)
    live = _pcp_exponent_bound(parent_intensity, mean_cluster_size, kernel, inter, x) < _UNDERFLOW
    out = np.zeros_like(x)
    if not np.any(live):
        return out
    xl = x[live]
    xe = xl[..., None]

    def f(z):
        return -np.expm1(-mean_cluster_size * cluster_exponent(kernel, inter, xe, z, inner)) * z

    reach = _positive_scale(inter.reach(xl), kernel.scale)
    split = reach + offset_support(kernel)
    total = 0.0
    lo = 0.0
    if isinstance(kernel, Matern):
        # support of the radial law changes shape at z = r_d
        total = integrate_finite(f, 0.0, np.broadcast_to(kernel.radius, xl.shape), spec).value
        lo = kernel.radius
    total = total + integrate_finite(f, np.broadcast_to(lo, xl.shape), split, spec).value
    total = total + integrate_semi_infinite(f, split, spec, scale=split).value
    out[live] = np.exp(-2.0 * np.pi * parent_intensity * total)
    return out


def interference_pgfl(model: NetworkModel, interferer: int, serving: int, x,
                      spec: QuadratureSpec = INNER):
    """G_j(v_{k,j}(x, .)) for any interfering tier j, including tier 0."""
    if interferer == 0:
        return pgfl_phi0(model, serving, x, spec)
    tier = model.tier(interferer)
    inter = interaction(model, serving, interferer)
    p = tier.process
    if isinstance(p, PPP):
        return pgfl_ppp_closed(p.intensity, inter.a, model.alpha, x)
    return pgfl_pcp(p.parent_intensity, p.mean_cluster_size, p.kernel, inter, x, spec, spec)


def pgfl_phi0(model: NetworkModel, serving: int, x, spec: QuadratureSpec = INNER):
    """PGFL of the BSs sharing the typical user's cluster, at v_{k,0}.

    Case 1: 1.  Case 2: E v(x, |z0|).  Case 3: E exp(-m T(x, |z0|)), times
    (1 - T) for a size-biased cluster count.
    """
    x = np.asarray(x, dtype=float)
    t0 = model.tier0
    if t0 is None:
        return np.ones_like(x)
    inter = interaction(model, serving, 0)
    kern = t0.kernel
    xe = x[..., None]
    if t0.case == 2:
        f = lambda y: inter(xe, y) * kern.offset_density(y)
    else:
        m = t0.mean_cluster_size

        def f(z):
            t = cluster_exponent(kern, inter, xe, z, spec)
            # an extra point in the size-biased cluster contributes a factor 1 - T
            extra = (1.0 - t) if t0.size_biased else 1.0
            return np.exp(-m * t) * extra * kern.offset_density(z)
    upper = np.broadcast_to(offset_support(kern), x.shape)
    return integrate_finite(f, np.zeros_like(x), upper, spec).value


# ---------------------------------------------------------------------------
# sum-product functionals  E[ sum_x g(x) prod_{y != x} v(x, y) ]

def _outer(f, x_max, scale, spec):
    if x_max is not None:
        return integrate_finite(f, 0.0, x_max, spec).value
    return integrate_semi_infinite(f, 0.0, spec, scale=scale).value


def sum_product_ppp(g, intensity: float, inter, spec: QuadratureSpec = OUTER,
                    inner: QuadratureSpec = INNER, x_max=None, scale=None, pgfl=None):
    """PPP: 2 pi lambda int g(x) G(v(x, .)) x dx (reduced Palm = original).

    ``pgfl`` overrides the PGFL evaluation (the coverage code passes the
    closed form).  ``x_max`` bounds the integral when g has compact support.
    """
    if intensity == 0:
        return 0.0
    if pgfl is None:
        pgfl = lambda x: pgfl_ppp(intensity, inter, x, inner)
    if scale is None:
        scale = 1.0 / np.sqrt(intensity)
    f = lambda x: g(x) * pgfl(x) * x
    return 2.0 * np.pi * intensity * _outer(f, x_max, scale, spec)


def _palm_cluster_weight(kernel, m, inter, x, spec):
    """int exp(-m T(x, z)) radial_density(x | z) z dz over cluster centres."""
    xe = x[..., None]

    def f(z):
        return pgfl_cluster(kernel, m, inter, xe, z, spec) * kernel.radial_density(xe, z) * z

    return integrate_over_support(kernel, x, f, spec)


def sum_product_pcp(g, parent_intensity: float, mean_cluster_size: float,
                    kernel: ClusterKernel, inter, spec: QuadratureSpec = OUTER,
                    inner: QuadratureSpec = INNER, x_max=None, scale=None, pgfl=None):
    """PCP: 2 pi lambda_p m int g(x) G(v(x, .)) [int G_c(v(x, .)|z) f(x|z) z dz] dx.

    The product G * G_c is the PGFL under the reduced Palm distribution at a
    point x whose cluster centre is z.
    """
    lp, m = parent_intensity, mean_cluster_size
    if lp == 0 or m == 0:
        return 0.0
    if pgfl is None:
        pgfl = lambda x: pgfl_pcp(lp, m, kernel, inter, x, inner, inner)
    if scale is None:
        scale = 1.0 / np.sqrt(lp * m) + kernel.scale

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(g(x), x.shape) * pgfl(x)
        live = out > 0
        if np.any(live):
            out[live] *= _palm_cluster_weight(kernel, m, inter, x[live], inner)
        return out

    return 2.0 * np.pi * lp * m * _outer(f, x_max, scale, spec)


def sum_product_offspring(g, kernel: ClusterKernel, mean_cluster_size: float, z, inter,
                          spec: QuadratureSpec = OUTER, inner: QuadratureSpec = INNER):
    """Single cluster centred at distance z, seen from one of its own points.

    int g(x) exp(-m T(x, z)) (m (1 - T(x, z)) + 1) f(x | z) dx; the "+1"
    comes from the size-biased count of a cluster known to hold x.
    """
    m = mean_cluster_size
    z = np.asarray(z, dtype=float)
    ze = z[..., None]

    def f(x):
        t = cluster_exponent(kernel, inter, x, ze, inner)
        return g(x) * np.exp(-m * t) * (m * (1.0 - t) + 1.0) * kernel.radial_density(x, ze)

    return integrate_over_support(kernel, z, f, spec)
