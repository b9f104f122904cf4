"""scikit-learn style wrapper around the motion detectors."""
from __future__ import annotations

import math
from dataclasses import fields
from typing import Iterator

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sequence
from .config import ModelConfig
from .correlator import DIRECTIONS, VARIANTS, direction_index
from .exceptions import ContractError
from .model import ModelFrame, MotionModel

_D = ModelConfig()


class MotionDirectionEstimator(TransformerMixin, BaseEstimator):
    """Wide-field motion direction from an image sequence.

    ``fit`` learns nothing; it validates the frame geometry and builds the
    kernels. ``transform`` returns the four summed LPTC responses per frame
    (columns ordered right, up, left, down) and ``predict`` the winning
    direction in radians, NaN where the estimate is "no motion".

    Parameters mirror :class:`~tqdmotion.config.ModelConfig`, plus
    ``variant`` (``"classic"`` or ``"improved"``).
    """

    def __init__(self, variant="improved", sigma1=_D.sigma1, n1=_D.n1, tau1=_D.tau1, n2=_D.n2,
                 tau2=_D.tau2, sigma2=_D.sigma2, alpha1=_D.alpha1, alpha2=_D.alpha2, n3=_D.n3,
                 tau3=_D.tau3, omega_half=_D.omega_half, baseline_d=_D.baseline_d, dt=_D.dt,
                 renormalize_kernels=_D.renormalize_kernels, boundary=_D.boundary):
        self.variant = variant
        self.sigma1 = sigma1
        self.n1 = n1
        self.tau1 = tau1
        self.n2 = n2
        self.tau2 = tau2
        self.sigma2 = sigma2
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.n3 = n3
        self.tau3 = tau3
        self.omega_half = omega_half
        self.baseline_d = baseline_d
        self.dt = dt
        self.renormalize_kernels = renormalize_kernels
        self.boundary = boundary

    @classmethod
    def from_config(cls, cfg: ModelConfig, variant="improved") -> MotionDirectionEstimator:
        return cls(variant=variant, **cfg.to_dict())

    def _make_config(self) -> ModelConfig:
        return ModelConfig(**{f.name: getattr(self, f.name) for f in fields(ModelConfig)})

    def fit(self, X, y=None):
        if self.variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        X = check_sequence(X)
        self.config_ = self._make_config()
        self.frame_shape_ = X.shape[1:]
        self.warmup_frames_ = MotionModel(self.config_, self.frame_shape_).warmup_frames
        return self

    def iter_frames(self, X) -> Iterator[ModelFrame]:
        """Stream per-frame model outputs for ``X``; frames are timed at ``k * dt``."""
        check_is_fitted(self, "config_")
        X = check_sequence(X, self.frame_shape_)
        model = MotionModel(self.config_, self.frame_shape_, (self.variant,))
        for k, frame in enumerate(X):
            yield model.step(frame, k * self.config_.dt)

    def transform(self, X) -> np.ndarray:
        return np.array([mf.estimates[self.variant].per_direction_sums for mf in self.iter_frames(X)])

    def predict(self, X) -> np.ndarray:
        out = []
        for mf in self.iter_frames(X):
            theta = mf.estimates[self.variant].theta
            out.append(math.nan if theta is None else theta)
        return np.array(out)

    def warmup_mask(self, n_frames: int) -> np.ndarray:
        check_is_fitted(self, "config_")
        return np.arange(n_frames) < self.warmup_frames_

    def score(self, X, y) -> float:
        """Share of post-warm-up frames whose direction matches ``y``.

        ``y`` is a single cardinal direction (radians or name) or one per frame.
        """
        pred = self.predict(X)
        if np.ndim(y) == 0:
            y = [y] * len(pred)
        truth = np.array([DIRECTIONS[direction_index(v)] for v in y])
        keep = ~self.warmup_mask(len(pred))
        if not keep.any():
            raise ContractError("every frame lies inside the warm-up period")
        return float(np.mean(pred[keep] == truth[keep]))
