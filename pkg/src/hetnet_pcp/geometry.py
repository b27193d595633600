"""Network scenarios, cluster kernels and point-process samplers.

Lengths are meters and intensities are points per square meter throughout.
Tier ids are positive integers; id 0 is reserved for the BSs that share the
typical user's cluster (built from the user placement).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.special import i0e

# Thomas offspring farther than this many sigmas from the parent are
# ignored when choosing the parent sampling window (mass ~ exp(-12.5))
THOMAS_REACH_SIGMAS = 5.0
# Thomas radial densities are integrated over |x - z| <= this many sigmas
THOMAS_SUPPORT_SIGMAS = 8.0


class ConfigurationError(ValueError):
    pass


def _check_nonneg(**kw):
    for name, val in kw.items():
        if np.any(np.asarray(val) < 0):
            raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Matern:
    """Offspring uniform on a disc of the given radius."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Matern radius must be positive")

    @property
    def reach(self) -> float:
        return self.radius

    @property
    def scale(self) -> float:
        return self.radius

    def scaled(self, factor: float) -> "Matern":
        return Matern(self.radius * factor)

    def offset_density(self, s):
        """Density of the offspring distance from its parent."""
        s = np.asarray(s, dtype=float)
        r = self.radius
        return np.where((s > 0) & (s <= r), 2.0 * s / r**2, 0.0)

    def radial_density(self, x, z):
        """Density of |z + s| at x for a parent at distance z."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        _check_nonneg(x=x, z=z)
        r = self.radius
        x, z = np.broadcast_arrays(x, z)
        inner = (z <= r) & (x < r - z)
        ring = ~inner & (x > np.abs(z - r)) & (x < z + r)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            c = (x * x + z * z - r * r) / (2.0 * x * z)
        c = np.clip(np.where(ring, c, 0.0), -1.0, 1.0)
        out = np.where(inner, 2.0 * x / r**2, 0.0)
        return np.where(ring, 2.0 * x / (np.pi * r**2) * np.arccos(c), out)

    def support_pieces(self, w):
        """Integration pieces for the radial density in its other argument.

        The support is symmetric in (x, z), so the same pieces serve an
        integral over x at fixed z and over z at fixed x.  Returns
        ``(lo, hi, smooth)`` triples; ``smooth`` marks square-root endpoint
        behaviour.
        """
        w = np.asarray(w, dtype=float)
        r = self.radius
        return [
            (np.zeros_like(w), np.maximum(r - w, 0.0), False),
            (np.abs(w - r), w + r, True),
        ]

    def sample_offsets(self, rng: np.random.Generator, n: int) -> np.ndarray:
        rho = self.radius * np.sqrt(rng.random(n))
        theta = 2.0 * np.pi * rng.random(n)
        return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


@dataclass(frozen=True)
class Thomas:
    """Offspring displaced by an isotropic Gaussian with std ``sigma``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Thomas sigma must be positive")

    @property
    def reach(self) -> float:
        return THOMAS_REACH_SIGMAS * self.sigma

    @property
    def scale(self) -> float:
        return self.sigma

    def scaled(self, factor: float) -> "Thomas":
        return Thomas(self.sigma * factor)

    def offset_density(self, s):
        s = np.asarray(s, dtype=float)
        s2 = self.sigma**2
        return np.where(s > 0, s / s2 * np.exp(-s * s / (2 * s2)), 0.0)

    def radial_density(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        _check_nonneg(x=x, z=z)
        s2 = self.sigma**2
        # exp(-(x^2+z^2)/2s2) I0(xz/s2) == exp(-(x-z)^2/2s2) i0e(xz/s2)
        return x / s2 * np.exp(-(x - z) ** 2 / (2 * s2)) * i0e(x * z / s2)

    def support_pieces(self, w):
        w = np.asarray(w, dtype=float)
        c = THOMAS_SUPPORT_SIGMAS * self.sigma
        return [(np.maximum(w - c, 0.0), w + c, False)]

    def sample_offsets(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(0.0, self.sigma, size=(n, 2))


ClusterKernel = Union[Matern, Thomas]


def radial_conditional_density(kernel: ClusterKernel, x, z):
    """Density of the distance from the origin of an offspring point whose
    parent sits at distance ``z``."""
    return kernel.radial_density(x, z)


@dataclass(frozen=True)
class PPP:
    intensity: float

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")

    @property
    def mean_intensity(self) -> float:
        return self.intensity


@dataclass(frozen=True)
class PCP:
    """Neyman-Scott process: Poisson parents, Poisson(mean_cluster_size) offspring."""

    parent_intensity: float
    mean_cluster_size: float
    kernel: ClusterKernel

    def __post_init__(self):
        if self.parent_intensity < 0 or self.mean_cluster_size < 0:
            raise ValueError("parent intensity and cluster size must be non-negative")

    @property
    def mean_intensity(self) -> float:
        return self.parent_intensity * self.mean_cluster_size


@dataclass(frozen=True)
class TierSpec:
    id: int
    process: Union[PPP, PCP]
    power: float
    threshold: float

    def __post_init__(self):
        if int(self.id) != self.id or self.id < 1:
            raise ConfigurationError("tier ids must be positive integers (0 is the user cluster tier)")
        if not self.power > 0:
            raise ConfigurationError(f"tier {self.id}: power must be positive")
        if not self.threshold > 0:
            raise ConfigurationError(f"tier {self.id}: threshold must be positive")

    @property
    def is_ppp(self) -> bool:
        return isinstance(self.process, PPP)

    @property
    def mean_intensity(self) -> float:
        return self.process.mean_intensity


@dataclass(frozen=True)
class UserPlacement:
    """How users relate to the BS tiers.

    case 1: users form an independent PPP.
    case 2: users cluster around the points of PPP tier ``anchor`` with
            displacement kernel ``kernel``.
    case 3: users share the parents of PCP tier ``anchor`` and inherit its
            kernel and mean cluster size.

    ``size_biased`` (case 3 only) gives the BS cluster sharing the user's
    parent 1 + Poisson(m) points instead of Poisson(m).  The default treats
    that cluster as an ordinary offspring process: it is the user cluster,
    not the BS cluster, that is selected by the typical user.
    """

    case: int = 1
    anchor: int | None = None
    kernel: ClusterKernel | None = None
    mean_cluster_size: float | None = None
    size_biased: bool = False

    def __post_init__(self):
        if self.case not in (1, 2, 3):
            raise ConfigurationError("user placement case must be 1, 2 or 3")
        if self.case == 1 and (self.anchor is not None or self.kernel is not None):
            raise ConfigurationError("case 1 users take no anchor tier or kernel")
        if self.case in (2, 3) and self.anchor is None:
            raise ConfigurationError(f"case {self.case} users need an anchor tier")
        if self.case == 2 and self.kernel is None:
            raise ConfigurationError("case 2 users need a cluster kernel")
        if self.size_biased and self.case != 3:
            raise ConfigurationError("size_biased applies to case 3 only")

    @classmethod
    def uniform(cls) -> "UserPlacement":
        return cls(1)

    @classmethod
    def around_ppp(cls, anchor: int, kernel: ClusterKernel) -> "UserPlacement":
        return cls(2, anchor, kernel)

    @classmethod
    def with_pcp(cls, anchor: int, size_biased: bool = False) -> "UserPlacement":
        return cls(3, anchor, size_biased=size_biased)


@dataclass(frozen=True)
class Tier0:
    """The BSs coupled with the typical user, carved out of the anchor tier."""

    case: int
    anchor: int
    power: float
    threshold: float
    kernel: ClusterKernel
    mean_cluster_size: float | None  # None for case 2 (a single BS)
    size_biased: bool = False


@dataclass(frozen=True)
class NetworkModel:
    tiers: tuple
    alpha: float
    users: UserPlacement = field(default_factory=UserPlacement)

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.tiers:
            raise ConfigurationError("a network needs at least one tier")
        ids = [t.id for t in self.tiers]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("tier ids must be unique")
        if not self.alpha > 2:
            raise ConfigurationError("path-loss exponent must exceed 2")
        u = self.users
        if u.case == 1:
            return
        if u.anchor not in ids:
            raise ConfigurationError(f"anchor tier {u.anchor} does not exist")
        anchor = self.tier(u.anchor)
        if u.case == 2 and not anchor.is_ppp:
            raise ConfigurationError("case 2 anchor must be a PPP tier")
        if u.case == 3:
            if anchor.is_ppp:
                raise ConfigurationError("case 3 anchor must be a PCP tier")
            if u.kernel is not None and u.kernel != anchor.process.kernel:
                raise ConfigurationError("case 3 user kernel must equal the anchor tier kernel")
            if (u.mean_cluster_size is not None
                    and u.mean_cluster_size != anchor.process.mean_cluster_size):
                raise ConfigurationError("case 3 cluster size must equal the anchor tier's")

    def tier(self, tier_id: int) -> TierSpec:
        for t in self.tiers:
            if t.id == tier_id:
                return t
        raise KeyError(tier_id)

    @property
    def tier_ids(self) -> list[int]:
        return [t.id for t in self.tiers]

    @property
    def tier0(self) -> Tier0 | None:
        u = self.users
        if u.case == 1:
            return None
        anchor = self.tier(u.anchor)
        if u.case == 2:
            return Tier0(2, anchor.id, anchor.power, anchor.threshold, u.kernel, None)
        proc = anchor.process
        return Tier0(3, anchor.id, anchor.power, anchor.threshold,
                     proc.kernel, proc.mean_cluster_size, u.size_biased)

    def power(self, tier_id: int) -> float:
        return self.tier0.power if tier_id == 0 else self.tier(tier_id).power

    def threshold(self, tier_id: int) -> float:
        return self.tier0.threshold if tier_id == 0 else self.tier(tier_id).threshold

    @property
    def all_ids(self) -> list[int]:
        """Tier ids including 0 when the user placement creates it."""
        return ([0] if self.users.case != 1 else []) + self.tier_ids

    def kernel_reach(self) -> float:
        reach = [t.process.kernel.reach for t in self.tiers if not t.is_ppp]
        if self.users.kernel is not None:
            reach.append(self.users.kernel.reach)
        return max(reach, default=0.0)

    def replace_tier(self, tier_id: int, **changes) -> "NetworkModel":
        tiers = tuple(replace(t, **changes) if t.id == tier_id else t for t in self.tiers)
        return replace(self, tiers=tiers)

    def scale_intensities(self, factor: float) -> "NetworkModel":
        """Multiply every PPP intensity and every parent intensity."""
        tiers = []
        for t in self.tiers:
            p = t.process
            if isinstance(p, PPP):
                p = PPP(p.intensity * factor)
            else:
                p = replace(p, parent_intensity=p.parent_intensity * factor)
            tiers.append(replace(t, process=p))
        return replace(self, tiers=tuple(tiers))

    def scale_clusters(self, factor: float) -> "NetworkModel":
        """Stretch every cluster kernel (BS tiers and user kernel) by ``factor``."""
        tiers = []
        for t in self.tiers:
            p = t.process
            if isinstance(p, PCP):
                p = replace(p, kernel=p.kernel.scaled(factor))
            tiers.append(replace(t, process=p))
        users = self.users
        if users.kernel is not None:
            users = replace(users, kernel=users.kernel.scaled(factor))
        return replace(self, tiers=tuple(tiers), users=users)


# ---------------------------------------------------------------------------
# samplers

def _uniform_disc(rng, n, radius):
    rho = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


def sample_ppp(intensity: float, window_radius: float, rng: np.random.Generator) -> np.ndarray:
    """PPP restricted to the disc b(0, window_radius), as an (n, 2) array."""
    if intensity < 0 or window_radius <= 0:
        raise ValueError("intensity must be >= 0 and window_radius > 0")
    n = rng.poisson(intensity * np.pi * window_radius**2)
    return _uniform_disc(rng, n, window_radius)


def sample_pcp(parent_intensity: float, mean_cluster_size: float, kernel: ClusterKernel,
               window_radius: float, rng: np.random.Generator):
    """Neyman-Scott process observed in b(0, window_radius).

    Parents are drawn on the window enlarged by the kernel reach so that
    clusters centred just outside still contribute.  Returns
    ``(points, parents)``, both (n, 2), where ``parents[i]`` is the cluster
    centre of ``points[i]``.
    """
    if parent_intensity < 0 or mean_cluster_size < 0 or window_radius <= 0:
        raise ValueError("invalid PCP parameters")
    parents = sample_ppp(parent_intensity, window_radius + kernel.reach, rng)
    counts = rng.poisson(mean_cluster_size, size=len(parents))
    centres = np.repeat(parents, counts, axis=0)
    pts = centres + kernel.sample_offsets(rng, len(centres))
    inside = np.einsum("ij,ij->i", pts, pts) <= window_radius**2
    return pts[inside], centres[inside]


def sample_typical_cluster(model: NetworkModel, rng: np.random.Generator) -> np.ndarray:
    """Locations of the tier-0 BSs for a typical user at the origin.

    Case 2 gives the single anchor BS at z0, with z0 drawn from the user
    kernel (both kernels are radially symmetric, so the user-to-centre
    displacement has the kernel's own law).  Case 3 gives Poisson(m)
    offspring of the anchor kernel around z0 (1 + Poisson(m) when the
    placement is size-biased).
    """
    t0 = model.tier0
    if t0 is None:
        return np.empty((0, 2))
    z0 = t0.kernel.sample_offsets(rng, 1)
    if t0.case == 2:
        return z0
    n = rng.poisson(t0.mean_cluster_size) + int(t0.size_biased)
    return z0 + t0.kernel.sample_offsets(rng, n)


@dataclass
class PointPattern:
    """One realization of every BS tier around a typical user at the origin."""

    points: np.ndarray        # (n, 2)
    tiers: np.ndarray         # (n,) tier id, 0 for the user's own cluster
    parents: np.ndarray       # (n, 2), NaN for PPP points
    typical_user: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def phi0(self) -> np.ndarray:
        return self.points[self.tiers == 0]

    def distances(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])


def sample_network(model: NetworkModel, window_radius: float,
                   rng: np.random.Generator) -> PointPattern:
    pts, tiers, parents = [], [], []
    for t in model.tiers:
        p = t.process
        if isinstance(p, PPP):
            xy = sample_ppp(p.intensity, window_radius, rng)
            par = np.full_like(xy, np.nan)
        else:
            xy, par = sample_pcp(p.parent_intensity, p.mean_cluster_size, p.kernel,
                                 window_radius, rng)
        pts.append(xy)
        parents.append(par)
        tiers.append(np.full(len(xy), t.id))
    phi0 = sample_typical_cluster(model, rng)
    pts.append(phi0)
    tiers.append(np.zeros(len(phi0), dtype=int))
    parents.append(np.full_like(phi0, np.nan))
    return PointPattern(np.concatenate(pts), np.concatenate(tiers).astype(int),
                        np.concatenate(parents))
