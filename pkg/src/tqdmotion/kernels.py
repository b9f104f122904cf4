"""Spatial and temporal kernels for the retina, lamina and delay stages.

Temporal kernels are causal FIR tap arrays sampled at ``dt``. By default each
tap holds the kernel mass over its bin ``[k*dt, (k+1)*dt)``, computed from the
analytic CDF, so tap sums track the continuous integral even when the time
constant is only a few samples long. ``sampling="point"`` gives the plain
``dt * f(k*dt)`` rule instead.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import InvalidParameterError

DEFAULT_DT = 0.001
#: Remaining analytic mass allowed beyond the last temporal tap.
DEFAULT_TAIL_MASS = 1e-7

_SAMPLING = ("bin", "point")


def _require_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be positive, got {value!r}")


def _require_order(name, n):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1:
        raise InvalidParameterError(f"{name} must be an integer >= 1, got {n!r}")


@dataclass(frozen=True)
class SpatialKernel:
    """Square 2D tap grid centred on ``(radius, radius)``.

    ``separable`` optionally holds the 1D factor ``g`` with ``taps == outer(g, g)``
    up to rounding; filters use it as a fast path.
    """

    taps: np.ndarray
    separable: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise InvalidParameterError(f"spatial taps must be square with odd side, got {taps.shape}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        if self.separable is not None:
            sep = np.asarray(self.separable, dtype=float)
            sep.setflags(write=False)
            object.__setattr__(self, "separable", sep)

    @property
    def radius(self) -> int:
        return self.taps.shape[0] // 2

    @property
    def center(self) -> tuple[int, int]:
        return (self.radius, self.radius)

    def trimmed(self) -> SpatialKernel:
        """Drop outer rings whose taps are all exactly zero."""
        r = self.radius
        while r > 0:
            ring = self.taps[self.radius - r:self.radius + r + 1,
                             self.radius - r:self.radius + r + 1].copy()
            ring[1:-1, 1:-1] = 0.0
            if np.any(ring != 0):
                break
            r -= 1
        lo, hi = self.radius - r, self.radius + r + 1
        return SpatialKernel(self.taps[lo:hi, lo:hi])


@dataclass(frozen=True)
class TemporalKernel:
    """Causal tap array; ``taps[0]`` weights the current sample."""

    taps: np.ndarray
    dt: float = DEFAULT_DT

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size == 0:
            raise InvalidParameterError("temporal taps must be a non-empty 1D array")
        _require_positive("dt", self.dt)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return self.taps.size

    @property
    def horizon(self) -> float:
        return self.length * self.dt

    def __len__(self):
        return self.length


@dataclass(frozen=True)
class SpaceTimeKernel:
    """Sum of separable space-time terms ``sum_i S_i(x, y) T_i(t)``."""

    terms: tuple[tuple[SpatialKernel, TemporalKernel], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))
        if not self.terms:
            raise InvalidParameterError("a space-time kernel needs at least one term")


# --------------------------------------------------------------------------
# Spatial

def default_radius(sigma: float) -> int:
    return max(1, math.ceil(4 * sigma))


def gaussian2d(sigma: float, radius: int | None = None) -> SpatialKernel:
    """Isotropic Gaussian ``exp(-(i^2+j^2)/(2 sigma^2)) / (2 pi sigma^2)`` at integer offsets."""
    _require_positive("sigma", sigma)
    if radius is None:
        radius = default_radius(sigma)
    if isinstance(radius, bool) or int(radius) != radius or radius < 1:
        raise InvalidParameterError(f"radius must be an integer >= 1, got {radius!r}")
    radius = int(radius)
    offs = np.arange(-radius, radius + 1, dtype=float)
    ii, jj = np.meshgrid(offs, offs, indexing="ij")
    taps = np.exp(-(ii**2 + jj**2) / (2 * sigma**2)) / (2 * np.pi * sigma**2)
    g1 = np.exp(-(offs**2) / (2 * sigma**2)) / (np.sqrt(2 * np.pi) * sigma)
    return SpatialKernel(taps, separable=g1)


def dog_split(sigma2: float, radius: int | None = None) -> tuple[SpatialKernel, SpatialKernel]:
    """Positive and negative parts of ``G(sigma2) - G(2 sigma2)``.

    Both parts share the surround's radius so they add back to the DoG tap grid.
    """
    _require_positive("sigma2", sigma2)
    if radius is None:
        radius = default_radius(2 * sigma2)
    dog = gaussian2d(sigma2, radius).taps - gaussian2d(2 * sigma2, radius).taps
    return SpatialKernel(np.maximum(dog, 0.0)), SpatialKernel(np.minimum(dog, 0.0))


# --------------------------------------------------------------------------
# Temporal

def gamma_density(n: int, tau: float, t) -> np.ndarray:
    """``(n t)^n exp(-n t / tau) / ((n-1)! tau^(n+1))``, zero for ``t < 0``."""
    t = np.asarray(t, dtype=float)
    tp = np.clip(t, 0.0, None)
    # log form avoids overflow of (n t)^n for large n
    with np.errstate(divide="ignore"):
        logv = n * np.log(n * tp) - n * tp / tau - special.gammaln(n) - (n + 1) * math.log(tau)
    return np.where(t < 0, 0.0, np.exp(logv))


def gamma_cdf(n: int, tau: float, t) -> np.ndarray:
    """Integral of :func:`gamma_density` from 0 to ``t`` (shape n+1, scale tau/n)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, None)
    return special.gammainc(n + 1, n * t / tau)


def _taps_for(duration: float, dt: float) -> int:
    # tolerate float noise such as 0.0675 / 0.001 = 67.50000000000001
    return max(1, math.ceil(duration / dt - 1e-9))


def gamma_horizon(n: int, tau: float, dt: float = DEFAULT_DT,
                  tail_mass: float = DEFAULT_TAIL_MASS) -> int:
    """Tap count for a gamma kernel.

    At least ``5 tau (n+1)/n`` and long enough that the mass left past the
    last tap is at most ``tail_mass``.
    """
    _require_order("n", n)
    _require_positive("tau", tau)
    _require_positive("dt", dt)
    floor = 5 * tau * (n + 1) / n
    t_tail = special.gammainccinv(n + 1, tail_mass) * tau / n
    return _taps_for(max(floor, t_tail), dt)


def exponential_horizon(alpha: float, dt: float = DEFAULT_DT,
                        tail_mass: float = DEFAULT_TAIL_MASS) -> int:
    _require_positive("alpha", alpha)
    _require_positive("dt", dt)
    return _taps_for(max(5 * alpha, -alpha * math.log(tail_mass)), dt)


def _check_sampling(sampling):
    if sampling not in _SAMPLING:
        raise InvalidParameterError(f"sampling must be one of {_SAMPLING}, got {sampling!r}")


def _finish(taps, dt, normalize):
    if normalize:
        taps = taps / taps.sum()
    return TemporalKernel(taps, dt)


def gamma_kernel(n: int, tau: float, dt: float = DEFAULT_DT, length: int | None = None,
                 sampling: str = "bin", normalize: bool = False) -> TemporalKernel:
    """Discretised unit-mass gamma kernel peaking at ``t = tau``."""
    _require_order("n", n)
    _require_positive("tau", tau)
    _require_positive("dt", dt)
    _check_sampling(sampling)
    if length is None:
        length = gamma_horizon(n, tau, dt)
    k = np.arange(length + 1, dtype=float) * dt
    if sampling == "bin":
        taps = np.diff(gamma_cdf(n, tau, k))
    else:
        taps = dt * gamma_density(n, tau, k[:-1])
    return _finish(taps, dt, normalize)


def exponential_kernel(alpha: float, dt: float = DEFAULT_DT, length: int | None = None,
                       sampling: str = "bin", normalize: bool = False) -> TemporalKernel:
    """Discretised ``exp(-t/alpha)/alpha``."""
    _require_positive("alpha", alpha)
    _require_positive("dt", dt)
    _check_sampling(sampling)
    if length is None:
        length = exponential_horizon(alpha, dt)
    k = np.arange(length, dtype=float) * dt
    if sampling == "bin":
        taps = np.exp(-k / alpha) * -np.expm1(-dt / alpha)
    else:
        taps = dt * np.exp(-k / alpha) / alpha
    return _finish(taps, dt, normalize)


def highpass_kernel(n1: int, tau1: float, n2: int, tau2: float, dt: float = DEFAULT_DT,
                    sampling: str = "bin", normalize: bool = False) -> TemporalKernel:
    """Zero-DC band-pass kernel ``Gamma(n1, tau1) - Gamma(n2, tau2)``.

    Each component keeps its own horizon; the shorter one is zero-padded.
    With ``normalize`` both components are rescaled to unit mass first, so
    the difference sums to zero up to rounding.
    """
    if (n1, tau1) == (n2, tau2):
        raise InvalidParameterError("highpass components are identical; the kernel would be zero")
    a = gamma_kernel(n1, tau1, dt, sampling=sampling, normalize=normalize).taps
    b = gamma_kernel(n2, tau2, dt, sampling=sampling, normalize=normalize).taps
    size = max(a.size, b.size)
    taps = np.zeros(size)
    taps[:a.size] += a
    taps[:b.size] -= b
    return TemporalKernel(taps, dt)


def inhibition_kernel(sigma2: float, alpha1: float, alpha2: float, radius: int | None = None,
                      horizon: float | None = None, dt: float = DEFAULT_DT,
                      sampling: str = "bin", normalize: bool = False) -> SpaceTimeKernel:
    """Centre-surround lateral inhibition kernel with two space-time terms.

    Term 1 pairs the positive DoG part with the fast exponential (``alpha1``);
    term 2 pairs the negative part with the slow one (``alpha2``). ``horizon``
    (seconds) overrides the per-exponential default truncation.
    """
    _require_positive("alpha1", alpha1)
    _require_positive("alpha2", alpha2)
    if alpha2 <= alpha1:
        raise InvalidParameterError(f"alpha2 ({alpha2}) must exceed alpha1 ({alpha1})")
    pos, neg = dog_split(sigma2, radius)
    length = None if horizon is None else _taps_for(horizon, dt)
    fast = exponential_kernel(alpha1, dt, length, sampling, normalize)
    slow = exponential_kernel(alpha2, dt, length, sampling, normalize)
    return SpaceTimeKernel(((pos, fast), (neg, slow)))
