"""Synthetic translating backgrounds and the on-disk frame sequence format.

A sequence directory holds ``frame_000000.pgm`` ... (binary P5, 16-bit,
big-endian) plus ``manifest.txt`` with one ``key=value`` per line.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from .correlator import DIRECTIONS, direction_index
from .exceptions import ContractError, InvalidParameterError, SequenceFormatError

TEXTURES = ("clutter-noise", "blocks", "stripes")
_ALIASES = {"clutter": "clutter-noise", "noise": "clutter-noise", "block": "blocks", "stripe": "stripes"}

MANIFEST_NAME = "manifest.txt"
MANIFEST_KEYS = ("width", "height", "frames", "sample_rate_hz", "direction_rad",
                 "velocity_px_s", "texture", "seed")
MAXVAL = 65535

# unit (row, col) displacement of content moving along each cardinal direction
_STEP = ((0, 1), (-1, 0), (0, -1), (1, 0))


def texture_kind(name: str) -> str:
    kind = _ALIASES.get(name, name)
    if kind not in TEXTURES:
        raise InvalidParameterError(f"unknown texture {name!r}; choose from {TEXTURES}")
    return kind


@dataclass(frozen=True)
class LuminanceFrame:
    pixels: np.ndarray
    timestamp: float = 0.0

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class StimulusSpec:
    """A textured background translating at constant velocity.

    ``direction`` is one of the cardinal angles (radians) or a name such as
    ``"right"``; it is stored as radians.
    """

    width: int
    height: int
    frame_count: int
    sample_rate: float = 1000.0
    direction: float = 0.0
    velocity: float = 0.0
    texture: str = "clutter-noise"
    seed: int = 0
    luminance_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(f"frame must have positive area, got {self.width}x{self.height}")
        if self.frame_count < 1:
            raise InvalidParameterError("frame_count must be >= 1")
        if not self.sample_rate > 0:
            raise InvalidParameterError("sample_rate must be positive")
        if not self.velocity >= 0:
            raise InvalidParameterError("velocity must be >= 0")
        try:
            k = direction_index(self.direction)
        except ContractError as exc:
            raise InvalidParameterError(str(exc)) from None
        object.__setattr__(self, "direction", DIRECTIONS[k])
        object.__setattr__(self, "texture", texture_kind(self.texture))
        lo, hi = (float(v) for v in self.luminance_range)
        if not 0.0 <= lo < hi <= 1.0:
            raise InvalidParameterError(f"luminance_range must satisfy 0 <= lo < hi <= 1, got {(lo, hi)}")
        object.__setattr__(self, "luminance_range", (lo, hi))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def displacement(self, k: int) -> float:
        """Distance in pixels travelled by frame ``k``."""
        return round(self.velocity * k / self.sample_rate, 9)


# --------------------------------------------------------------------------
# Textures (all periodic on the frame torus)

def make_texture(kind: str, shape, seed: int = 0, luminance_range=(0.0, 1.0)) -> np.ndarray:
    kind = texture_kind(kind)
    rng = np.random.default_rng(seed)
    h, w = shape
    if kind == "clutter-noise":
        tex = ndimage.gaussian_filter(rng.random((h, w)), 1.0, mode="wrap")
    elif kind == "blocks":
        tex = _blocks(rng, h, w)
    else:
        tex = _gratings(rng, h, w)
    lo, hi = luminance_range
    span = tex.max() - tex.min()
    if span == 0:
        return np.full((h, w), (lo + hi) / 2)
    return lo + (hi - lo) * (tex - tex.min()) / span


def _blocks(rng, h, w):
    tex = np.full((h, w), 0.5)
    n_blocks = max(1, int(h * w / 40))
    for _ in range(n_blocks):
        bh, bw = rng.integers(3, 16, size=2)
        r, c = rng.integers(0, h), rng.integers(0, w)
        rows = np.arange(r, r + bh) % h
        cols = np.arange(c, c + bw) % w
        tex[np.ix_(rows, cols)] = rng.random()
    return tex


def _gratings(rng, h, w, count=8):
    rows, cols = np.mgrid[0:h, 0:w]
    tex = np.zeros((h, w))
    for _ in range(count):
        # integer cycles per frame keep each grating periodic on the torus
        period = rng.uniform(6.0, 20.0)
        angle = rng.uniform(0, np.pi)
        ky = round(h / period * np.sin(angle))
        kx = round(w / period * np.cos(angle))
        if kx == 0 and ky == 0:
            kx = 1
        phase = rng.uniform(0, 2 * np.pi)
        tex += np.cos(2 * np.pi * (ky * rows / h + kx * cols / w) + phase)
    return tex


def shift_toroidal(image: np.ndarray, drow: float, dcol: float) -> np.ndarray:
    """Translate content by ``(drow, dcol)`` pixels with wrap-around and bilinear weights."""
    out = np.zeros_like(image, dtype=float)
    r0, c0 = math.floor(drow), math.floor(dcol)
    fr, fc = drow - r0, dcol - c0
    for dr, wr in ((0, 1 - fr), (1, fr)):
        if wr == 0:
            continue
        for dc, wc in ((0, 1 - fc), (1, fc)):
            if wc == 0:
                continue
            out += wr * wc * np.roll(image, (r0 + dr, c0 + dc), axis=(0, 1))
    return out


def render_frame(spec: StimulusSpec, k: int, texture: np.ndarray | None = None) -> LuminanceFrame:
    if texture is None:
        texture = make_texture(spec.texture, spec.shape, spec.seed, spec.luminance_range)
    s = spec.displacement(k)
    step_r, step_c = _STEP[direction_index(spec.direction)]
    lo, hi = spec.luminance_range
    pixels = np.clip(shift_toroidal(texture, step_r * s, step_c * s), lo, hi)
    return LuminanceFrame(pixels, k / spec.sample_rate)


def generate(spec: StimulusSpec) -> Iterator[LuminanceFrame]:
    """Yield the frames of ``spec`` in time order; identical specs give identical frames."""
    texture = make_texture(spec.texture, spec.shape, spec.seed, spec.luminance_range)
    for k in range(spec.frame_count):
        yield render_frame(spec, k, texture)


def generate_array(spec: StimulusSpec) -> np.ndarray:
    """All frames stacked as ``(T, H, W)``."""
    return np.stack([f.pixels for f in generate(spec)])


# --------------------------------------------------------------------------
# PGM I/O

def frame_name(k: int) -> str:
    return f"frame_{k:06d}.pgm"


def write_pgm(path, pixels: np.ndarray):
    pixels = np.asarray(pixels, dtype=float)
    q = np.round(np.clip(pixels, 0.0, 1.0) * MAXVAL).astype(">u2")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii"))
        fh.write(q.tobytes())


_TOKEN = re.compile(rb"(#[^\n]*\n)|(\S+)")


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM and scale samples to ``[0, 1]``."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = _TOKEN.search(data, pos)
        if m is None:
            raise SequenceFormatError(f"{path}: truncated PGM header")
        pos = m.end()
        if m.group(2) is not None:
            tokens.append(m.group(2))
    if tokens[0] != b"P5":
        raise SequenceFormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise SequenceFormatError(f"{path}: bad PGM header") from None
    if not 0 < maxval <= 65535:
        raise SequenceFormatError(f"{path}: bad maxval {maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    body = data[pos + 1:]
    need = w * h * np.dtype(dtype).itemsize
    if len(body) < need:
        raise SequenceFormatError(f"{path}: expected {need} bytes of pixel data, found {len(body)}")
    arr = np.frombuffer(body[:need], dtype=dtype).reshape(h, w)
    return arr.astype(float) / maxval


def _manifest_text(meta: dict) -> str:
    return "".join(f"{k}={meta[k]}\n" for k in meta)


def spec_metadata(spec: StimulusSpec) -> dict:
    return {
        "width": spec.width, "height": spec.height, "frames": spec.frame_count,
        "sample_rate_hz": repr(float(spec.sample_rate)), "direction_rad": repr(spec.direction),
        "velocity_px_s": repr(float(spec.velocity)), "texture": spec.texture, "seed": spec.seed,
        "luminance_lo": repr(spec.luminance_range[0]), "luminance_hi": repr(spec.luminance_range[1]),
    }


def write_sequence(frames: Iterable, path, spec: StimulusSpec | None = None,
                   sample_rate_hz: float | None = None) -> dict:
    """Write frames and a manifest into directory ``path``; returns the manifest fields.

    Without ``spec`` the motion fields of the manifest are recorded as ``none``.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    shape = None
    count = 0
    for k, frame in enumerate(frames):
        pixels = np.asarray(getattr(frame, "pixels", frame), dtype=float)
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise SequenceFormatError(f"frame {k}: shape {pixels.shape} differs from {shape}")
        write_pgm(out / frame_name(k), pixels)
        count += 1
    if shape is None:
        raise SequenceFormatError("no frames to write")
    if spec is not None:
        meta = spec_metadata(spec)
        if (spec.height, spec.width) != shape or spec.frame_count != count:
            raise SequenceFormatError("frames do not match the stimulus spec")
    else:
        if sample_rate_hz is None:
            raise InvalidParameterError("sample_rate_hz is required when no spec is given")
        meta = {"width": shape[1], "height": shape[0], "frames": count,
                "sample_rate_hz": repr(float(sample_rate_hz)), "direction_rad": "none",
                "velocity_px_s": "none", "texture": "none", "seed": "none"}
    (out / MANIFEST_NAME).write_text(_manifest_text(meta))
    return meta


@dataclass
class SequenceReader:
    """Lazily reads a sequence directory written by :func:`write_sequence`."""

    path: Path
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        from .config import ConfigError, parse_key_values

        self.path = Path(self.path)
        mpath = self.path / MANIFEST_NAME
        if not mpath.is_file():
            raise SequenceFormatError(f"{self.path}: missing {MANIFEST_NAME}")
        try:
            raw = parse_key_values(mpath.read_text())
        except ConfigError as exc:
            raise SequenceFormatError(f"{mpath}: {exc}") from None
        missing = [k for k in MANIFEST_KEYS if k not in raw]
        if missing:
            raise SequenceFormatError(f"{mpath}: missing keys {', '.join(missing)}")
        try:
            self.width = int(raw["width"])
            self.height = int(raw["height"])
            self.frame_count = int(raw["frames"])
            self.sample_rate = float(raw["sample_rate_hz"])
        except ValueError as exc:
            raise SequenceFormatError(f"{mpath}: {exc}") from None
        if self.width < 1 or self.height < 1 or self.frame_count < 1 or not self.sample_rate > 0:
            raise SequenceFormatError(f"{mpath}: non-positive dimension, frame count or rate")
        self.direction = _optional_float(raw["direction_rad"])
        self.velocity = _optional_float(raw["velocity_px_s"])
        self.manifest = raw
        for k in range(self.frame_count):
            if not (self.path / frame_name(k)).is_file():
                raise SequenceFormatError(f"frame {k}: missing file {frame_name(k)}")
        extra = self.path / frame_name(self.frame_count)
        if extra.exists():
            raise SequenceFormatError(
                f"frame {self.frame_count}: more frame files than the manifest's {self.frame_count}")

    def __len__(self):
        return self.frame_count

    @property
    def shape(self):
        return (self.height, self.width)

    def read_frame(self, k: int) -> LuminanceFrame:
        if not 0 <= k < self.frame_count:
            raise IndexError(k)
        pixels = read_pgm(self.path / frame_name(k))
        if pixels.shape != self.shape:
            raise SequenceFormatError(
                f"frame {k}: size {pixels.shape[1]}x{pixels.shape[0]} differs from manifest "
                f"{self.width}x{self.height}")
        return LuminanceFrame(pixels, k / self.sample_rate)

    def __iter__(self) -> Iterator[LuminanceFrame]:
        for k in range(self.frame_count):
            yield self.read_frame(k)


def read_sequence(path) -> SequenceReader:
    return SequenceReader(Path(path))


def _optional_float(raw: str):
    if raw.lower() == "none":
        return None
    try:
        return float(raw)
    except ValueError:
        raise SequenceFormatError(f"bad numeric manifest value {raw!r}") from None
