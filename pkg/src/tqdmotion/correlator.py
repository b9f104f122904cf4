"""T4/T5 delay-and-correlate detectors, LPTC summation and direction readout.

Directions are indexed 0..3 for theta = 0, pi/2, pi, 3pi/2 (right, up, left,
down), with image rows growing downward so "up" means decreasing row index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, ShapeError
from .pipeline import ChannelPair

DIRECTIONS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
DIRECTION_NAMES = ("right", "up", "left", "down")
VARIANTS = ("classic", "improved")

# (row, col) step per unit baseline towards the pixel *behind* a feature
# moving along theta
_BEHIND = ((0, -1), (1, 0), (0, 1), (-1, 0))

#: relative gap below which the two largest direction sums count as tied
TIE_RTOL = 1e-12


def direction_index(theta) -> int:
    """Map a cardinal angle (radians) or name to its index."""
    if isinstance(theta, str):
        try:
            return DIRECTION_NAMES.index(theta.lower())
        except ValueError:
            raise ContractError(f"unknown direction name {theta!r}") from None
    for i, d in enumerate(DIRECTIONS):
        if abs(math.remainder(float(theta) - d, 2 * math.pi)) < 1e-6:
            return i
    raise ContractError(f"theta={theta!r} is not a cardinal direction")


def behind(field2d: np.ndarray, theta, baseline_d: int = 1, boundary: str = "replicate") -> np.ndarray:
    """Sample ``field2d`` at ``(x - d cos theta, y - d sin theta)`` for every pixel.

    Partners falling outside the frame read as zero unless the boundary is
    toroidal. Replicating the edge there would pair a border pixel with its
    own delayed trace and fake a response in the outward direction.
    """
    k = direction_index(theta)
    dr, dc = (baseline_d * s for s in _BEHIND[k])
    mode = {"replicate": "constant", "toroidal": "wrap"}.get(boundary)
    if mode is None:
        raise ContractError(f"unknown boundary {boundary!r}")
    d = baseline_d
    padded = np.pad(field2d, d, mode=mode)
    h, w = field2d.shape
    return padded[d + dr:d + dr + h, d + dc:d + dc + w]


@dataclass
class DirectionalField:
    """Per-pixel responses for the four cardinal directions, shape ``(4, H, W)``."""

    values: np.ndarray
    timestamp: float = 0.0
    variant: str = "classic"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[0] != 4:
            raise ShapeError(f"directional field must have shape (4, H, W), got {self.values.shape}")
        if self.variant not in VARIANTS:
            raise ContractError(f"unknown variant {self.variant!r}")

    @property
    def shape(self):
        return self.values.shape[1:]

    def __getitem__(self, theta) -> np.ndarray:
        return self.values[direction_index(theta)]

    def scaled(self, c: float) -> DirectionalField:
        return DirectionalField(self.values * c, self.timestamp, self.variant)


@dataclass(frozen=True)
class DirectionEstimate:
    """Winner-take-all readout of the four summed LPTC responses.

    ``theta`` is ``None`` when every sum is zero (no motion).
    """

    theta: float | None
    timestamp: float
    per_direction_sums: tuple[float, float, float, float]
    margin: float
    tie: bool = False
    warmup: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def no_motion(self) -> bool:
        return self.theta is None


def correlate(current: ChannelPair, delayed: ChannelPair, baseline_d: int, theta,
              boundary: str = "replicate") -> tuple[np.ndarray, np.ndarray]:
    """T4 (ON) and T5 (OFF) products for one direction."""
    if current.shape != delayed.shape:
        raise ShapeError(f"current {current.shape} and delayed {delayed.shape} shapes differ")
    if current.timestamp != delayed.timestamp:
        raise ContractError("current and delayed channels carry different timestamps")
    t4 = current.on * behind(delayed.on, theta, baseline_d, boundary)
    t5 = current.off * behind(delayed.off, theta, baseline_d, boundary)
    return t4, t5


def correlate_directions(current: ChannelPair, delayed: ChannelPair, baseline_d: int = 1,
                         boundary: str = "replicate", variant: str = "classic"
                         ) -> tuple[DirectionalField, DirectionalField]:
    """T4 and T5 fields over all four directions."""
    t4 = np.empty((4,) + current.shape)
    t5 = np.empty_like(t4)
    for k, theta in enumerate(DIRECTIONS):
        t4[k], t5[k] = correlate(current, delayed, baseline_d, theta, boundary)
    return (DirectionalField(t4, current.timestamp, variant),
            DirectionalField(t5, current.timestamp, variant))


def lptc_output(t4: DirectionalField, t5: DirectionalField) -> DirectionalField:
    """LPTC response: T4 plus T5, per pixel and direction."""
    if t4.variant != t5.variant:
        raise ContractError(f"variant mismatch: {t4.variant} vs {t5.variant}")
    if t4.values.shape != t5.values.shape:
        raise ShapeError("T4 and T5 fields differ in shape")
    if t4.timestamp != t5.timestamp:
        raise ContractError("T4 and T5 fields carry different timestamps")
    return DirectionalField(t4.values + t5.values, t4.timestamp, t4.variant)


def normalize(field: DirectionalField) -> DirectionalField:
    """Divide by the maximum over pixels and directions; zero fields pass through."""
    peak = field.values.max() if field.values.size else 0.0
    if peak <= 0:
        return DirectionalField(field.values.copy(), field.timestamp, field.variant)
    return DirectionalField(field.values / peak, field.timestamp, field.variant)


def estimate_direction(field: DirectionalField, atol: float = 0.0, warmup: bool = False) -> DirectionEstimate:
    """Pick the direction with the largest summed response.

    Sums at or below ``atol`` count as zero; if all four do, the estimate is
    "no motion". Near-ties (within :data:`TIE_RTOL`) resolve in the order
    right, up, left, down and set ``tie``.
    """
    sums = tuple(float(s) for s in field.values.reshape(4, -1).sum(axis=1))
    if max(sums) <= atol:
        return DirectionEstimate(None, field.timestamp, sums, math.nan, False, warmup)
    best = max(sums)
    leaders = [k for k in range(4) if sums[k] >= best * (1 - TIE_RTOL)]
    winner = leaders[0]
    if len(leaders) > 1:
        return DirectionEstimate(DIRECTIONS[winner], field.timestamp, sums, 1.0, True, warmup)
    second = max(s for k, s in enumerate(sums) if k != winner)
    margin = math.inf if second <= 0 else best / second
    return DirectionEstimate(DIRECTIONS[winner], field.timestamp, sums, margin, False, warmup)
