"""Vectorised adaptive Gauss-Kronrod quadrature.

All integrators here work on *batches*: the limits ``a`` and ``b`` may be
arrays, and the integrand receives nodes of shape ``batch + (n,)`` and must
return values of the same shape.  Every batch member shares one subdivision
of the reference interval ``[0, 1]``; an interval is bisected when any
unconverged member needs it.  This keeps nested integrals (inner integral
evaluated on all nodes of the outer rule at once) inside numpy.

Scalar use is the special case of an empty batch shape.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "IntegrationError",
    "ToleranceNotMet",
    "DivergentIntegral",
    "QuadratureWarning",
    "integrate_finite",
    "integrate_semi_infinite",
    "INNER",
    "OUTER",
]

# Gauss-Kronrod 7/15 pair (QUADPACK qk15), positive half of the nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# the embedded 7-point Gauss rule uses Kronrod nodes 1, 3, 5, 7, 9, 11, 13
GAUSS_INDEX = np.array([1, 3, 5, 7, 9, 11, 13])
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])

# elements per integrand call before new intervals are split into chunks
_CHUNK_ELEMENTS = 1 << 22


class IntegrationError(ArithmeticError):
    pass


class ToleranceNotMet(IntegrationError):
    """Raised when the subdivision budget runs out; carries the best estimate."""

    def __init__(self, value, error, message="tolerance not met"):
        super().__init__(message)
        self.value = value
        self.error = error


class DivergentIntegral(IntegrationError):
    pass


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for one integration level.

    ``cutoff_multiple`` selects the semi-infinite policy: ``None`` maps
    ``[a, inf)`` onto ``[0, 1)`` with ``x = a + s t / (1 - t)``; a number
    ``c`` truncates at ``a + c * s`` where ``s`` is the caller's length
    scale.  With ``strict=False`` a missed tolerance emits a
    :class:`QuadratureWarning` instead of raising.
    """

    rel_tol: float = 1e-7
    abs_tol: float = 1e-10
    max_subdivisions: int = 256
    cutoff_multiple: float | None = None
    strict: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.cutoff_multiple is not None and self.cutoff_multiple <= 0:
            raise ValueError("cutoff_multiple must be positive")

    def relaxed(self, factor: float) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol * factor, self.abs_tol * factor,
                              self.max_subdivisions, self.cutoff_multiple, self.strict)


# defaults for nested evaluation: tight inner levels, looser outer levels
INNER = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-10, strict=False)
OUTER = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-8, strict=False)


class QuadResult(NamedTuple):
    value: np.ndarray | float
    error: np.ndarray | float


def _error_estimate(vals, kron, gauss, h):
    # QUADPACK qk15 heuristic: scale |K - G| by the spread of the integrand
    err = np.abs(kron - gauss)
    mean = 0.5 * (vals @ KRONROD_WEIGHTS)
    resasc = (np.abs(vals - mean[..., None]) @ KRONROD_WEIGHTS) * h
    resabs = (np.abs(vals) @ KRONROD_WEIGHTS) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    return np.maximum(err, 50.0 * np.finfo(float).eps * resabs)


def _adaptive_unit(g, batch_shape, spec: QuadratureSpec, initial: int = 1):
    """Integrate g(t) over t in [0, 1] for every batch member.

    g maps a flat node array of shape (n,) to values of shape batch + (n,).
    """
    lo = np.linspace(0.0, 1.0, initial + 1)[:-1]
    hi = np.linspace(0.0, 1.0, initial + 1)[1:]
    k_parts = []
    e_parts = []
    batch_size = int(np.prod(batch_shape, dtype=np.int64)) if batch_shape else 1

    def evaluate(lo_new, hi_new):
        half = 0.5 * (hi_new - lo_new)
        mid = 0.5 * (hi_new + lo_new)
        per_chunk = max(1, _CHUNK_ELEMENTS // (15 * max(batch_size, 1)))
        ks, es = [], []
        for s in range(0, lo_new.size, per_chunk):
            h = half[s:s + per_chunk]
            m = mid[s:s + per_chunk]
            t = (m[:, None] + h[:, None] * KRONROD_NODES[None, :]).ravel()
            vals = np.asarray(g(t), dtype=float)
            vals = np.broadcast_to(vals, batch_shape + t.shape)
            vals = vals.reshape(batch_shape + (h.size, 15))
            if not np.all(np.isfinite(vals)):
                raise IntegrationError("integrand returned non-finite values")
            kron = (vals @ KRONROD_WEIGHTS) * h
            gauss = (vals[..., GAUSS_INDEX] @ GAUSS_WEIGHTS) * h
            ks.append(kron)
            es.append(_error_estimate(vals, kron, gauss, h))
        return np.concatenate(ks, axis=-1), np.concatenate(es, axis=-1)

    k, e = evaluate(lo, hi)
    k_parts, e_parts = [k], [e]
    while True:
        kron = np.concatenate(k_parts, axis=-1)
        err = np.concatenate(e_parts, axis=-1)
        k_parts, e_parts = [kron], [err]
        total = kron.sum(axis=-1)
        err_total = err.sum(axis=-1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        bad = err_total > tol
        if not np.any(bad):
            return total, err_total, True
        width = hi - lo
        over = (err > tol[..., None] * width) & bad[..., None]
        split = over.reshape(-1, lo.size).any(axis=0) if batch_shape else over
        if not np.any(split):
            worst = np.where(bad[..., None], err, -1.0).reshape(-1, lo.size).max(axis=0)
            split = worst == worst.max()
        split &= width > 1e-13
        if not np.any(split) or lo.size + int(split.sum()) > spec.max_subdivisions:
            return total, err_total, False
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        k_new, e_new = evaluate(new_lo, new_hi)
        k_parts = [np.concatenate([kron[..., keep], k_new], axis=-1)]
        e_parts = [np.concatenate([err[..., keep], e_new], axis=-1)]


def _finish(total, err, ok, spec: QuadratureSpec, scalar: bool):
    if scalar:
        total, err = float(total), float(err)
    if not ok:
        if spec.strict:
            raise ToleranceNotMet(total, err)
        warnings.warn("quadrature tolerance not met", QuadratureWarning, stacklevel=3)
    return QuadResult(total, err)


def integrate_finite(f: Callable, a, b, spec: QuadratureSpec = QuadratureSpec(),
                     smooth_endpoints: bool = False, initial: int = 1) -> QuadResult:
    """Integrate ``f`` over ``[a, b]``.

    ``a`` and ``b`` broadcast to the batch shape.  ``smooth_endpoints``
    applies ``t = (1 - cos(pi u)) / 2`` first, which removes square-root
    endpoint singularities (the Matern arccos densities have them).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    if np.any(b < a):
        raise ValueError("integrate_finite requires a <= b")
    batch_shape = a.shape
    h = b - a

    if smooth_endpoints:
        def g(u):
            t = 0.5 * (1.0 - np.cos(np.pi * u))
            jac = 0.5 * np.pi * np.sin(np.pi * u)
            x = a[..., None] + h[..., None] * t
            return f(x) * (h[..., None] * jac)
    else:
        def g(t):
            x = a[..., None] + h[..., None] * t
            return f(x) * h[..., None]

    total, err, ok = _adaptive_unit(g, batch_shape, spec, initial)
    return _finish(total, err, ok, spec, scalar=batch_shape == ())


def _check_tail(g, batch_shape):
    # transformed integrand blowing up like (1 - t)^-1 or faster means a
    # non-integrable algebraic tail
    t = 1.0 - 2.0 ** -np.array([8.0, 12.0, 16.0, 20.0])
    vals = np.abs(np.broadcast_to(np.asarray(g(t), dtype=float), batch_shape + t.shape))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = vals[..., 1:] / vals[..., :-1]
    growing = np.all(ratio[..., 1:] > 12.0, axis=-1) & (vals[..., -1] > 0)
    if np.any(growing):
        raise DivergentIntegral("integrand tail does not decay fast enough")


def integrate_semi_infinite(f: Callable, a, spec: QuadratureSpec = QuadratureSpec(),
                            scale=1.0, check_divergence: bool = True) -> QuadResult:
    """Integrate ``f`` over ``[a, inf)``.

    ``scale`` is a characteristic length of the integrand (broadcastable
    with ``a``); it sets the map ``x = a + scale * t / (1 - t)`` or, under a
    fixed cutoff policy, the truncation point ``a + c * scale``.
    """
    a = np.asarray(a, dtype=float)
    scale = np.asarray(scale, dtype=float)
    a, scale = np.broadcast_arrays(a, scale)
    if np.any(scale <= 0):
        raise ValueError("scale must be positive")
    if spec.cutoff_multiple is not None:
        return integrate_finite(f, a, a + spec.cutoff_multiple * scale, spec)
    batch_shape = a.shape

    def g(t):
        x = a[..., None] + scale[..., None] * t / (1.0 - t)
        return f(x) * (scale[..., None] / (1.0 - t) ** 2)

    if check_divergence:
        _check_tail(g, batch_shape)
    total, err, ok = _adaptive_unit(g, batch_shape, spec, initial=2)
    return _finish(total, err, ok, spec, scalar=batch_shape == ())
