"""Monte Carlo ground truth for coverage and for the point-process functionals.

The coverage simulator works on batches of trials at once.  Only distances
to the typical user matter, so PPP tiers are drawn as distances directly;
PCP tiers need planar parents and offsets.  Each batch draws from its own
substream ``SeedSequence([seed, batch_index])``, so a run is reproducible
regardless of how batches are spread over threads.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Union

import numpy as np

from .coverage import CoverageEstimate, Method
from .geometry import (
    PCP, PPP, ClusterKernel, ConfigurationError, NetworkModel, sample_network, sample_pcp,
    sample_ppp,
)

__all__ = [
    "SimulationConfig", "TrialOutcome", "MCEstimate", "OffspringProcess",
    "simulate_coverage", "simulate_trial", "default_windows", "window_sufficiency",
    "estimate_void_probability", "estimate_sum_product", "confidence_half_width",
    "THREADS_ENV",
]

THREADS_ENV = "HETNET_THREADS"
BATCH_TRIALS = 500


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo settings.

    ``window_radius=None`` picks a window per tier (see ``default_windows``);
    a number forces one window for every tier.
    """

    trials: int = 100_000
    window_radius: float | None = None
    rng_seed: int = 0
    confidence_level: float = 0.99
    threads: int | None = None
    check_uniqueness: bool = False

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.window_radius is not None and not self.window_radius > 0:
            raise ValueError("window_radius must be positive")
        if not 0 < self.confidence_level < 1:
            raise ValueError("confidence_level must lie in (0, 1)")


@dataclass(frozen=True)
class TrialOutcome:
    covered: bool
    covering_tier: int | None = None

    def __post_init__(self):
        if self.covered != (self.covering_tier is not None):
            raise ValueError("covering_tier must be set exactly when covered")


@dataclass(frozen=True)
class MCEstimate:
    value: float
    half_width: float
    trials: int
    std_error: float = float("nan")


@dataclass(frozen=True)
class OffspringProcess:
    """One cluster centred at distance ``centre`` from the origin.

    ``size_biased=True`` draws the count as 1 + Poisson(m), the law of a
    cluster seen from one of its own points.
    """

    kernel: ClusterKernel
    mean_cluster_size: float
    centre: float
    size_biased: bool = True


def confidence_half_width(p: float, n: int, level: float) -> float:
    """Normal half-width; Wilson's interval when n p or n (1 - p) is below 10.

    The Wilson interval is not centred on p; the returned half-width is the
    larger distance from p to its ends, so p +- half_width contains it.
    """
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    if min(n * p, n * (1.0 - p)) >= 10:
        return z * np.sqrt(p * (1.0 - p) / n)
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return float(max(centre + half - p, p - (centre - half)))


def _threads(config: SimulationConfig) -> int:
    if config.threads is not None:
        return max(1, int(config.threads))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _batches(trials: int):
    return [(i, min(BATCH_TRIALS, trials - s)) for i, s in enumerate(range(0, trials, BATCH_TRIALS))]


def _batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


# ---------------------------------------------------------------------------
# coverage

def default_windows(model: NetworkModel, config: SimulationConfig | None = None) -> dict:
    """Sampling radius per tier: max(20 / sqrt(mean intensity), 10 x kernel reach)."""
    reach = model.kernel_reach()
    out = {}
    for t in model.tiers:
        if config is not None and config.window_radius is not None:
            out[t.id] = float(config.window_radius)
            continue
        lam = t.mean_intensity
        base = 20.0 / np.sqrt(lam) if lam > 0 else 0.0
        out[t.id] = float(max(base, 10.0 * reach, 1.0))
    return out


def _check_windows(model: NetworkModel, windows: dict):
    reach = model.kernel_reach()
    for tid, w in windows.items():
        if w < 2.0 * reach:
            raise ConfigurationError(
                f"window radius {w:g} m for tier {tid} is below twice the kernel reach {reach:g} m")


def _pcp_distances(proc: PCP, radius: float, b: int, rng):
    """Offspring distances and trial indices for b independent PCP draws.

    Parents are uniform on the disc of radius ``radius + reach``.
    """
    rp = radius + proc.kernel.reach
    n_par = rng.poisson(proc.parent_intensity * np.pi * rp * rp, size=b)
    par_trial = np.repeat(np.arange(b), n_par)
    total = int(n_par.sum())
    rho = rp * np.sqrt(rng.random(total))
    theta = 2.0 * np.pi * rng.random(total)
    counts = rng.poisson(proc.mean_cluster_size, size=total)
    n = int(counts.sum())
    off = proc.kernel.sample_offsets(rng, n)
    px = np.repeat(rho * np.cos(theta), counts) + off[:, 0]
    py = np.repeat(rho * np.sin(theta), counts) + off[:, 1]
    return np.hypot(px, py), np.repeat(par_trial, counts)


def _tier0_distances(model: NetworkModel, b: int, rng):
    t0 = model.tier0
    kern = t0.kernel
    z0 = kern.sample_offsets(rng, b)
    if t0.case == 2:
        return np.hypot(z0[:, 0], z0[:, 1]), np.arange(b)
    counts = rng.poisson(t0.mean_cluster_size, size=b) + int(t0.size_biased)
    n = int(counts.sum())
    pts = np.repeat(z0, counts, axis=0) + kern.sample_offsets(rng, n)
    return np.hypot(pts[:, 0], pts[:, 1]), np.repeat(np.arange(b), counts)


def _simulate_batch(model: NetworkModel, windows: dict, b: int, rng, check_uniqueness: bool):
    """Returns (covering tier per trial or -1, number of trials with >1 qualifying BS)."""
    alpha = model.alpha
    signal, boost, tier_of, trial_of = [], [], [], []
    for t in model.tiers:
        p = t.process
        r_w = windows[t.id]
        if isinstance(p, PPP):
            n = rng.poisson(p.intensity * np.pi * r_w * r_w, size=b)
            tr = np.repeat(np.arange(b), n)
            d2 = r_w * r_w * rng.random(tr.size)
            path = d2 ** (-alpha / 2.0)
        else:
            d, tr = _pcp_distances(p, r_w, b, rng)
            path = d ** (-alpha)
        signal.append(t.power * path)
        boost.append(np.full(tr.size, 1.0 + 1.0 / t.threshold))
        tier_of.append(np.full(tr.size, t.id))
        trial_of.append(tr)
    if model.tier0 is not None:
        d, tr = _tier0_distances(model, b, rng)
        signal.append(model.power(0) * d ** (-alpha))
        boost.append(np.full(tr.size, 1.0 + 1.0 / model.threshold(0)))
        tier_of.append(np.zeros(tr.size, dtype=int))
        trial_of.append(tr)

    s = np.concatenate(signal)
    s *= rng.standard_exponential(s.size)
    trial = np.concatenate(trial_of)
    tiers = np.concatenate(tier_of)
    total = np.bincount(trial, weights=s, minlength=b)
    # SIR_x >= beta_x  <=>  S_x (1 + 1/beta_x) >= sum of all received powers
    score = s * np.concatenate(boost)
    ok = score >= total[trial]
    cover = np.full(b, -1, dtype=int)
    multi = 0
    if np.any(ok):
        idx = np.flatnonzero(ok)
        if check_uniqueness:
            multi = int(np.sum(np.bincount(trial[idx], minlength=b) > 1))
        order = idx[np.argsort(-score[idx], kind="stable")]
        first_trial, first = np.unique(trial[order], return_index=True)
        cover[first_trial] = tiers[order[first]]
    return cover, multi


def simulate_coverage(model: NetworkModel, config: SimulationConfig = SimulationConfig()) -> CoverageEstimate:
    """Empirical max-SIR coverage with Rayleigh fading.

    A trial is covered when some BS has SIR at least its tier threshold; the
    covering tier is the one with the largest S_x (1 + 1/beta_x).
    """
    meta = {}
    if any(t.threshold <= 1 for t in model.tiers):
        msg = "thresholds <= 1: several BSs may qualify; the max-SIR one is counted"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        meta["warning"] = msg
    windows = default_windows(model, config)
    _check_windows(model, windows)

    batches = _batches(config.trials)

    def run(item):
        index, size = item
        return _simulate_batch(model, windows, size, _batch_rng(config.rng_seed, index),
                               config.check_uniqueness)

    n_threads = _threads(config)
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(item) for item in batches]

    cover = np.concatenate([r[0] for r in results])
    multi = sum(r[1] for r in results)
    n = config.trials
    ids = model.all_ids
    per_tier = {k: float(np.count_nonzero(cover == k)) / n for k in ids}
    total = float(np.count_nonzero(cover >= 0)) / n
    meta.update({
        "trials": n, "seed": config.rng_seed, "confidence_level": config.confidence_level,
        "windows": windows, "batch_trials": BATCH_TRIALS,
    })
    if config.check_uniqueness:
        meta["multiple_coverage_trials"] = multi
    return CoverageEstimate(total, per_tier, Method.MONTE_CARLO,
                            confidence_half_width(total, n, config.confidence_level), meta)


def window_sufficiency(model: NetworkModel, config: SimulationConfig = SimulationConfig()):
    """Compare coverage on the default windows and on windows twice as large.

    Returns (estimate, doubled estimate, passed); the check passes when the
    two estimates differ by less than the larger confidence half-width.
    """
    base = simulate_coverage(model, config)
    doubled = {k: 2.0 * w for k, w in default_windows(model, config).items()}
    # one shared radius is not enough to express per-tier windows, so run the
    # batches directly
    batches = _batches(config.trials)
    cover = np.concatenate([
        _simulate_batch(model, doubled, size, _batch_rng(config.rng_seed + 1, i), False)[0]
        for i, size in batches])
    p2 = float(np.count_nonzero(cover >= 0)) / config.trials
    hw = confidence_half_width(p2, config.trials, config.confidence_level)
    big = CoverageEstimate(p2, {}, Method.MONTE_CARLO, hw, {"windows": doubled})
    passed = abs(base.total - p2) < max(base.half_width, hw)
    return base, big, passed


def simulate_trial(model: NetworkModel, rng: np.random.Generator,
                   window_radius: float | None = None) -> TrialOutcome:
    """One trial on planar samples from ``geometry.sample_network``.

    Much slower than the batched path; kept as an independent check of it.
    """
    if window_radius is None:
        window_radius = max(default_windows(model).values())
    pat = sample_network(model, window_radius, rng)
    if len(pat.points) == 0:
        return TrialOutcome(False)
    d = pat.distances()
    powers = np.array([model.power(int(k)) for k in pat.tiers])
    beta = np.array([model.threshold(int(k)) for k in pat.tiers])
    s = powers * rng.standard_exponential(len(d)) * d ** (-model.alpha)
    sir = s / (s.sum() - s)
    ratio = sir / beta
    best = int(np.argmax(ratio))
    if ratio[best] >= 1:
        return TrialOutcome(True, int(pat.tiers[best]))
    return TrialOutcome(False)


# ---------------------------------------------------------------------------
# void probabilities and sum-product functionals

Process = Union[PPP, PCP, OffspringProcess]


def _mean_estimate(samples: np.ndarray, level: float) -> MCEstimate:
    n = samples.size
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return MCEstimate(mean, z * se, n, se)


def estimate_void_probability(process: Union[PPP, PCP], radius: float,
                              config: SimulationConfig = SimulationConfig()) -> MCEstimate:
    """Fraction of realizations with no point in the disc b(0, radius)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if config.window_radius is not None and radius >= config.window_radius:
        raise ConfigurationError("void disc must lie inside the window")
    empty = []
    for index, b in _batches(config.trials):
        rng = _batch_rng(config.rng_seed, index)
        if isinstance(process, PPP):
            n = rng.poisson(process.intensity * np.pi * radius * radius, size=b)
            empty.append(n == 0)
        else:
            # only parents within radius + reach can put points in the disc
            d, tr = _pcp_distances(process, radius, b, rng)
            hits = np.bincount(tr[d < radius], minlength=b)
            empty.append(hits == 0)
    empty = np.concatenate(empty)
    p = float(empty.mean())
    hw = confidence_half_width(p, config.trials, config.confidence_level)
    se = float(np.sqrt(p * (1 - p) / config.trials))
    return MCEstimate(p, hw, config.trials, se)


def _sample_distances(process: Process, window: float, rng) -> np.ndarray:
    if isinstance(process, PPP):
        return np.hypot(*sample_ppp(process.intensity, window, rng).T)
    if isinstance(process, PCP):
        pts, _ = sample_pcp(process.parent_intensity, process.mean_cluster_size,
                            process.kernel, window, rng)
        return np.hypot(pts[:, 0], pts[:, 1])
    n = rng.poisson(process.mean_cluster_size) + (1 if process.size_biased else 0)
    pts = np.array([process.centre, 0.0]) + process.kernel.sample_offsets(rng, n)
    return np.hypot(pts[:, 0], pts[:, 1])


def estimate_sum_product(process: Process, g: Callable, v, config: SimulationConfig,
                         support_radius: float | None = None) -> MCEstimate:
    """Empirical E[sum_x g(|x|) prod_{y != x} v(|x|, |y|)].

    ``v`` is any interaction with ``__call__(x, y)`` on distances (e.g.
    ``functionals.VFactor``).  ``support_radius`` skips points x beyond it,
    for g that vanish there.  Infinite processes need
    ``config.window_radius``.
    """
    if not isinstance(process, OffspringProcess) and config.window_radius is None:
        raise ConfigurationError("sum-product estimates for PPP/PCP need a window radius")
    values = np.empty(config.trials)
    k = 0
    for index, b in _batches(config.trials):
        rng = _batch_rng(config.rng_seed, index)
        for _ in range(b):
            d = _sample_distances(process, config.window_radius, rng)
            sel = np.arange(d.size) if support_radius is None else np.flatnonzero(d <= support_radius)
            if sel.size == 0:
                values[k] = 0.0
            else:
                x = d[sel]
                vv = v(x[:, None], d[None, :])
                vv[np.arange(sel.size), sel] = 1.0   # y != x
                values[k] = float(np.sum(np.asarray(g(x), dtype=float) * np.prod(vv, axis=1)))
            k += 1
    return _mean_estimate(values, config.confidence_level)
