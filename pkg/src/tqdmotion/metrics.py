"""Threshold projection, detection rate (DR) and normalised detected points (NP)."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import ModelConfig
from .correlator import DIRECTIONS, VARIANTS, DirectionalField, direction_index, normalize
from .exceptions import ContractError, InvalidParameterError, WarmupError
from .model import MotionModel
from .pipeline import Pipeline, _unpack

FIRST_GAMMA = 0.01
NORMALIZED_ATOL = 1e-9
CSV_HEADER = "variant,velocity,frame,gamma,theta_rad,N,DR,NP"

#: Acceptance thresholds echoed in the summary block.
MIN_IMPROVED_DR = 0.9


@dataclass(frozen=True)
class ThresholdSchedule:
    """Strictly increasing projection thresholds starting at 0.01."""

    gammas: tuple[float, ...] = (0.01,) + tuple(round(0.05 * i, 2) for i in range(1, 11))

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        if not g:
            raise InvalidParameterError("threshold schedule is empty")
        if g[0] != FIRST_GAMMA:
            raise InvalidParameterError(f"first threshold must be {FIRST_GAMMA}, got {g[0]}")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise InvalidParameterError("thresholds must be strictly increasing")
        if g[-1] > 1:
            raise InvalidParameterError("thresholds must not exceed 1")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def parse(cls, text: str) -> ThresholdSchedule:
        try:
            return cls(tuple(float(t) for t in text.split(",") if t.strip()))
        except ValueError:
            raise InvalidParameterError(f"bad threshold list {text!r}") from None

    def __len__(self):
        return len(self.gammas)

    def __iter__(self):
        return iter(self.gammas)


def count_detections(field: DirectionalField, gamma: float) -> np.ndarray:
    """Number of pixels with normalised response strictly above ``gamma``, per direction."""
    if not 0 < gamma <= 1:
        raise ContractError(f"gamma must lie in (0, 1], got {gamma}")
    values = field.values
    if values.size and values.max() > 1 + NORMALIZED_ATOL:
        raise ContractError("field is not normalised (max exceeds 1)")
    return (values > gamma).reshape(4, -1).sum(axis=1)


def detection_rate(counts: Sequence[int], theta0) -> float | None:
    """Share of supra-threshold points lying in the true direction; ``None`` for 0/0."""
    counts = np.asarray(counts)
    total = int(counts.sum())
    if total == 0:
        return None
    return int(counts[direction_index(theta0)]) / total


def normalized_points(counts_over_schedule: Sequence[int]) -> list[float | None]:
    """Each threshold's true-direction count over the sum across the schedule."""
    counts = [int(c) for c in counts_over_schedule]
    if not counts:
        raise ContractError("schedule is empty")
    total = sum(counts)
    if total == 0:
        return [None] * len(counts)
    return [c / total for c in counts]


@dataclass
class ReportCell:
    """DR/NP evaluation of one variant on one frame."""

    variant: str
    velocity: float | None
    frame: int
    theta0: float
    gammas: tuple[float, ...]
    counts: np.ndarray  # (len(gammas), 4)

    @property
    def dr(self) -> list[float | None]:
        return [detection_rate(c, self.theta0) for c in self.counts]

    @property
    def np_(self) -> list[float | None]:
        return normalized_points(self.counts[:, direction_index(self.theta0)])

    @classmethod
    def from_field(cls, field: DirectionalField, schedule: ThresholdSchedule, theta0,
                   frame: int, velocity: float | None = None) -> ReportCell:
        theta0 = DIRECTIONS[direction_index(theta0)]
        fn = normalize(field)
        counts = np.array([count_detections(fn, g) for g in schedule.gammas])
        return cls(field.variant, velocity, frame, theta0, schedule.gammas, counts)


@dataclass
class MetricsReport:
    cells: list[ReportCell]
    schedule: ThresholdSchedule
    config: ModelConfig | None = None
    meta: dict = field(default_factory=dict)

    def cell(self, variant: str, velocity=None) -> ReportCell:
        for c in self.cells:
            if c.variant == variant and (velocity is None or c.velocity == velocity):
                return c
        raise KeyError((variant, velocity))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for c in self.cells:
            dr, np_ = c.dr, c.np_
            for i, g in enumerate(c.gammas):
                for k, theta in enumerate(DIRECTIONS):
                    buf.write(",".join((c.variant, _num(c.velocity), str(c.frame), _num(g),
                                        _num(theta), str(int(c.counts[i, k])),
                                        _num(dr[i]), _num(np_[i]))) + "\n")
        return buf.getvalue()

    def checks(self) -> dict:
        """Pass/fail of the DR level, DR ordering and NP monotonicity checks."""
        out = {}
        velocities = sorted({c.velocity for c in self.cells}, key=lambda v: (v is None, v))
        for v in velocities:
            key = _num(v) or "na"
            by_variant = {c.variant: c for c in self.cells if c.velocity == v}
            res = {}
            imp, cla = by_variant.get("improved"), by_variant.get("classic")
            if imp is not None:
                res["improved_dr_min"] = all(d is not None and d >= MIN_IMPROVED_DR for d in imp.dr)
            if imp is not None and cla is not None:
                di, dc = imp.dr[0], cla.dr[0]
                res["improved_dr_ge_classic_at_first_gamma"] = (
                    di is not None and (dc is None or di >= dc))
            for name, c in by_variant.items():
                res[f"{name}_np_nonincreasing"] = _nonincreasing(c.np_)
            out[key] = res
        return out

    def summary(self) -> str:
        block = {
            "config": self.config.to_dict() if self.config else None,
            "schedule": list(self.schedule.gammas),
            "cells": [
                {"variant": c.variant, "velocity": c.velocity, "frame": c.frame,
                 "theta0": c.theta0, "dr_first_gamma": c.dr[0]}
                for c in self.cells
            ],
            "checks": self.checks(),
        }
        block.update(self.meta)
        return json.dumps(block, indent=2, sort_keys=True) + "\n"

    @classmethod
    def combine(cls, reports: Iterable[MetricsReport]) -> MetricsReport:
        reports = list(reports)
        if not reports:
            raise ContractError("nothing to combine")
        cells = [c for r in reports for c in r.cells]
        return cls(cells, reports[0].schedule, reports[0].config, dict(reports[0].meta))


def compare_models(sequence: Iterable, cfg: ModelConfig, schedule: ThresholdSchedule,
                   frame_index: int, theta0, velocity: float | None = None,
                   variants=VARIANTS) -> MetricsReport:
    """Run both detectors on one stream and evaluate them at ``frame_index``."""
    frames = iter(sequence)
    try:
        first = next(frames)
    except StopIteration:
        raise ContractError("empty sequence") from None
    _, arr = _unpack(first)
    warm = Pipeline(cfg, arr.shape).warmup_frames
    if frame_index < warm:
        raise WarmupError(f"frame {frame_index} lies inside the {warm}-frame warm-up")
    model = MotionModel(cfg, arr.shape, variants)

    def stream():
        yield first
        yield from frames

    for mf in model.run(stream()):
        if mf.index == frame_index:
            cells = [ReportCell.from_field(mf.fields[v], schedule, theta0, frame_index, velocity)
                     for v in variants]
            return MetricsReport(cells, schedule, cfg)
    raise ContractError(f"sequence ended before frame {frame_index}")


def _nonincreasing(values) -> bool:
    vals = [v for v in values if v is not None]
    return all(b <= a for a, b in zip(vals, vals[1:]))


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))
