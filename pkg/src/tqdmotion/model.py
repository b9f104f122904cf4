"""Classic and improved two-quadrant detectors wired end to end."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .config import ModelConfig
from .correlator import (VARIANTS, DirectionalField, DirectionEstimate, correlate_directions,
                         estimate_direction, lptc_output)
from .exceptions import ContractError
from .pipeline import Pipeline, PipelineStep, _unpack

#: per-pixel LPTC sums at or below this fraction of ``peak_luminance**2``
#: are treated as no motion
NO_MOTION_RTOL = 1e-12


@dataclass
class ModelFrame:
    """Outputs of one or both detector variants for a single input frame."""

    step: PipelineStep
    fields: dict[str, DirectionalField]
    estimates: dict[str, DirectionEstimate]

    @property
    def index(self) -> int:
        return self.step.index

    @property
    def timestamp(self) -> float:
        return self.step.timestamp

    @property
    def warmup(self) -> bool:
        return self.step.warmup


class MotionModel:
    """Streams frames through the shared front end and both lobula variants."""

    def __init__(self, cfg: ModelConfig, shape, variants=VARIANTS):
        variants = tuple(variants)
        for v in variants:
            if v not in VARIANTS:
                raise ContractError(f"unknown variant {v!r}")
        self.cfg = cfg
        self.variants = variants
        self.pipeline = Pipeline(cfg, shape)
        self.peak_luminance = 0.0

    @property
    def warmup_frames(self) -> int:
        return self.pipeline.warmup_frames

    def no_motion_atol(self) -> float:
        npix = self.pipeline.shape[0] * self.pipeline.shape[1]
        return NO_MOTION_RTOL * npix * self.peak_luminance**2

    def step(self, frame, timestamp=None) -> ModelFrame:
        frame = np.asarray(frame, dtype=float)
        if frame.size:
            self.peak_luminance = max(self.peak_luminance, float(np.abs(frame).max()))
        st = self.pipeline.step(frame, timestamp)
        cfg = self.cfg
        fields, estimates = {}, {}
        for v in self.variants:
            cur, dly = (st.current, st.delayed) if v == "classic" else (st.current_max, st.delayed_max)
            t4, t5 = correlate_directions(cur, dly, cfg.baseline_d, cfg.boundary, v)
            f = lptc_output(t4, t5)
            fields[v] = f
            estimates[v] = estimate_direction(f, self.no_motion_atol(), st.warmup)
        return ModelFrame(st, fields, estimates)

    def run(self, frames: Iterable) -> Iterator[ModelFrame]:
        for item in frames:
            ts, arr = _unpack(item)
            yield self.step(arr, ts)
