"""Streaming retina, lamina and medulla stages.

Every temporal stage is a causal FIR filter over a ring buffer of past
frames, started from an all-zero history. Frames before the combined filter
memory has filled are tagged as warm-up.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from .config import ModelConfig
from .exceptions import ContractError, SequencingError, ShapeError
from .kernels import (SpatialKernel, TemporalKernel, gamma_kernel, gaussian2d,
                      highpass_kernel, inhibition_kernel)

_NDIMAGE_MODE = {"replicate": "nearest", "toroidal": "wrap"}


def ndimage_mode(boundary: str) -> str:
    try:
        return _NDIMAGE_MODE[boundary]
    except KeyError:
        raise ContractError(f"unknown boundary {boundary!r}") from None


@dataclass(frozen=True)
class ChannelPair:
    """Half-wave rectified ON and OFF fields at one time step."""

    on: np.ndarray
    off: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        if self.on.shape != self.off.shape:
            raise ShapeError(f"ON {self.on.shape} and OFF {self.off.shape} shapes differ")

    @property
    def shape(self):
        return self.on.shape


def spatial_filter(field: np.ndarray, kernel: SpatialKernel, boundary: str = "replicate") -> np.ndarray:
    """Convolve ``field`` with ``kernel`` using the given edge policy."""
    mode = ndimage_mode(boundary)
    field = np.asarray(field, dtype=float)
    if kernel.separable is not None:
        out = ndimage.convolve1d(field, kernel.separable, axis=0, mode=mode)
        return ndimage.convolve1d(out, kernel.separable, axis=1, mode=mode)
    return ndimage.convolve(field, kernel.trimmed().taps, mode=mode)


class CausalFilter:
    """Streaming temporal convolution of a sequence of equally shaped arrays.

    Holds the last ``len(kernel)`` inputs; anything older than the buffer, and
    everything before the first push, counts as zero.
    """

    def __init__(self, kernel: TemporalKernel, shape):
        self.kernel = kernel
        self.shape = tuple(shape)
        self._rev = kernel.taps[::-1].copy()
        self._buf = np.zeros((kernel.length,) + self.shape)
        self._pos = -1

    @property
    def depth(self) -> int:
        return self._buf.shape[0]

    def reset(self):
        self._buf[:] = 0.0
        self._pos = -1

    def push(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ShapeError(f"expected shape {self.shape}, got {x.shape}")
        self._pos = (self._pos + 1) % self.depth
        self._buf[self._pos] = x
        # slot s holds x[t - ((pos - s) mod L)]
        weights = np.roll(self._rev, self._pos + 1)
        return np.tensordot(weights, self._buf, axes=1)


class FrameClock:
    """Checks that timestamps advance by exactly one sample period."""

    def __init__(self, dt: float):
        self.dt = dt
        self.start: float | None = None
        self.last: float | None = None
        self.count = 0

    def tick(self, timestamp: float | None) -> float:
        if timestamp is None:
            timestamp = (self.start or 0.0) + self.count * self.dt
        if self.last is not None:
            step = timestamp - self.last
            if step <= 0:
                raise SequencingError(
                    f"frame {self.count}: timestamp {timestamp} does not follow {self.last}")
            if abs(step - self.dt) > 1e-6 * self.dt + 1e-12:
                raise SequencingError(
                    f"frame {self.count}: step {step} s differs from dt={self.dt} s")
        else:
            self.start = timestamp
        self.last = timestamp
        self.count += 1
        return timestamp


# --------------------------------------------------------------------------
# Retina

def retina_stage(frame: np.ndarray, cfg: ModelConfig = ModelConfig(), shape=None) -> np.ndarray:
    """Photoreceptor blur with ``G(sigma1)``."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        raise ShapeError(f"expected a 2D frame, got shape {frame.shape}")
    if shape is not None and frame.shape != tuple(shape):
        raise ShapeError(f"expected frame shape {tuple(shape)}, got {frame.shape}")
    return spatial_filter(frame, gaussian2d(cfg.sigma1), cfg.boundary)


# --------------------------------------------------------------------------
# Lamina

def lamina_kernels(cfg: ModelConfig):
    hp = highpass_kernel(cfg.n1, cfg.tau1, cfg.n2, cfg.tau2, cfg.dt,
                         normalize=cfg.renormalize_kernels)
    inh = inhibition_kernel(cfg.sigma2, cfg.alpha1, cfg.alpha2, dt=cfg.dt,
                            normalize=cfg.renormalize_kernels)
    return hp, inh


class Lamina:
    """Temporal contrast (band-pass) followed by space-time lateral inhibition."""

    def __init__(self, cfg: ModelConfig, shape):
        self.cfg = cfg
        self.shape = tuple(shape)
        self.highpass, self.inhibition = lamina_kernels(cfg)
        self._hp = CausalFilter(self.highpass, self.shape)
        (self._pos_k, fast), (self._neg_k, slow) = self.inhibition.terms
        self._fast = CausalFilter(fast, self.shape)
        self._slow = CausalFilter(slow, self.shape)
        # the negative DoG part is G(s2) - G(2 s2) - positive part; both
        # Gaussians are separable, which is much cheaper than its full grid
        radius = self._pos_k.radius
        self._g2 = gaussian2d(cfg.sigma2, radius)
        self._g3 = gaussian2d(cfg.sigma3, radius)

    @property
    def memory(self) -> int:
        return self._hp.depth - 1 + max(self._fast.depth, self._slow.depth) - 1

    def push(self, lum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(P, P_I)`` for the next photoreceptor frame."""
        b = self.cfg.boundary
        p = self._hp.push(lum)
        pos = spatial_filter(p, self._pos_k, b)
        neg = spatial_filter(p, self._g2, b) - spatial_filter(p, self._g3, b) - pos
        p_i = self._fast.push(pos) + self._slow.push(neg)
        return p, p_i


def lamina_stage(frames: Iterable, cfg: ModelConfig = ModelConfig()) -> Iterator[tuple[float, np.ndarray]]:
    """Stream ``(timestamp, P_I)`` from photoreceptor frames.

    ``frames`` yields arrays or ``(timestamp, array)`` pairs.
    """
    lamina = clock = None
    for item in frames:
        ts, arr = _unpack(item)
        if lamina is None:
            lamina = Lamina(cfg, np.shape(arr))
            clock = FrameClock(cfg.dt)
        ts = clock.tick(ts)
        yield ts, lamina.push(arr)[1]


# --------------------------------------------------------------------------
# Medulla

def medulla_split(p_i: np.ndarray, timestamp: float = 0.0) -> ChannelPair:
    """Half-wave rectify into ON ``(|x| + x)/2`` and OFF ``(|x| - x)/2``."""
    p_i = np.asarray(p_i, dtype=float)
    mag = np.abs(p_i)
    return ChannelPair((mag + p_i) / 2, (mag - p_i) / 2, timestamp)


def max_operation(channel: np.ndarray, omega_half: int = 2, boundary: str = "replicate") -> np.ndarray:
    """Keep pixels equal to the maximum of their ``(2h+1)^2`` neighbourhood, zero the rest.

    Every pixel attaining its window maximum survives, so ties are all kept.
    """
    channel = np.asarray(channel, dtype=float)
    if omega_half < 1:
        raise ContractError("omega_half must be >= 1")
    if np.any(channel < 0):
        raise ContractError("max operation expects a nonnegative field")
    local_max = ndimage.maximum_filter(channel, size=2 * omega_half + 1, mode=ndimage_mode(boundary))
    return np.where(channel == local_max, channel, 0.0)


def max_operation_pair(pair: ChannelPair, omega_half: int, boundary: str = "replicate") -> ChannelPair:
    return ChannelPair(max_operation(pair.on, omega_half, boundary),
                       max_operation(pair.off, omega_half, boundary), pair.timestamp)


class DelayLine:
    """Gamma-kernel delay applied to both channels of a :class:`ChannelPair`."""

    def __init__(self, cfg: ModelConfig, shape):
        self.kernel = gamma_kernel(cfg.n3, cfg.tau3, cfg.dt, normalize=cfg.renormalize_kernels)
        self._on = CausalFilter(self.kernel, shape)
        self._off = CausalFilter(self.kernel, shape)

    @property
    def memory(self) -> int:
        return self.kernel.length - 1

    def push(self, pair: ChannelPair) -> ChannelPair:
        return ChannelPair(self._on.push(pair.on), self._off.push(pair.off), pair.timestamp)


def delay_stage(pairs: Iterable[ChannelPair], cfg: ModelConfig = ModelConfig()) -> Iterator[ChannelPair]:
    line = clock = None
    for pair in pairs:
        if line is None:
            line = DelayLine(cfg, pair.shape)
            clock = FrameClock(cfg.dt)
        clock.tick(pair.timestamp)
        yield line.push(pair)


# --------------------------------------------------------------------------
# Full front end

@dataclass
class PipelineStep:
    """All intermediate signals for one input frame."""

    index: int
    timestamp: float
    warmup: bool
    luminance: np.ndarray
    photoreceptor: np.ndarray
    contrast: np.ndarray
    inhibited: np.ndarray
    current: ChannelPair
    delayed: ChannelPair
    current_max: ChannelPair
    delayed_max: ChannelPair

    def stages(self) -> dict[str, np.ndarray]:
        """Named stage arrays, for debug dumps."""
        return {
            "luminance": self.luminance,
            "photoreceptor": self.photoreceptor,
            "contrast": self.contrast,
            "inhibited": self.inhibited,
            "on": self.current.on,
            "off": self.current.off,
            "on_delayed": self.delayed.on,
            "off_delayed": self.delayed.off,
            "on_max": self.current_max.on,
            "off_max": self.current_max.off,
            "on_max_delayed": self.delayed_max.on,
            "off_max_delayed": self.delayed_max.off,
        }


class Pipeline:
    """Retina to medulla front end, producing plain and max-operated channels.

    Feed frames in time order with :meth:`step`. One instance serves both
    the classic and the improved detector since they share every stage up
    to the ON/OFF split.
    """

    def __init__(self, cfg: ModelConfig, shape):
        if len(shape) != 2 or min(shape) < 1:
            raise ShapeError(f"frame shape must be 2D and non-empty, got {shape}")
        self.cfg = cfg
        self.shape = tuple(int(s) for s in shape)
        self._blur = gaussian2d(cfg.sigma1)
        self.lamina = Lamina(cfg, self.shape)
        self._delay = DelayLine(cfg, self.shape)
        self._delay_max = DelayLine(cfg, self.shape)
        self.clock = FrameClock(cfg.dt)

    @property
    def warmup_frames(self) -> int:
        """Frames before every FIR window holds only real input."""
        return self.lamina.memory + self._delay.memory

    def step(self, frame: np.ndarray, timestamp: float | None = None) -> PipelineStep:
        frame = np.asarray(frame, dtype=float)
        if frame.shape != self.shape:
            raise ShapeError(f"expected frame shape {self.shape}, got {frame.shape}")
        index = self.clock.count
        ts = self.clock.tick(timestamp)
        lum = spatial_filter(frame, self._blur, self.cfg.boundary)
        p, p_i = self.lamina.push(lum)
        cur = medulla_split(p_i, ts)
        cur_max = max_operation_pair(cur, self.cfg.omega_half, self.cfg.boundary)
        return PipelineStep(
            index=index, timestamp=ts, warmup=index < self.warmup_frames,
            luminance=frame, photoreceptor=lum, contrast=p, inhibited=p_i,
            current=cur, delayed=self._delay.push(cur),
            current_max=cur_max, delayed_max=self._delay_max.push(cur_max),
        )


def _unpack(item):
    if isinstance(item, tuple) and len(item) == 2:
        return float(item[0]), np.asarray(item[1], dtype=float)
    ts = getattr(item, "timestamp", None)
    arr = getattr(item, "pixels", item)
    return ts, np.asarray(arr, dtype=float)
