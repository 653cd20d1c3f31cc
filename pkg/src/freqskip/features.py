"""Decision-step feature extraction shared by labeling and the run loop.

Both indicators are computed from the combined images the generator emits at
the decision step and the step before it, area-downsampled to a common
analysis resolution.  Labeling uses exactly this function, so training
features match what the run loop sees at inference time bit for bit.
"""

from __future__ import annotations

import numpy as np

from .decision import FeatureVector
from .frequency import HFParams, hf_diff, hf_ratio
from .generator import TraceConfig, step_images
from .image import resize_area


def decision_features(
    target: np.ndarray,
    cfg: TraceConfig,
    decision_step: int,
    analysis_size: int,
    hf_params: HFParams,
) -> FeatureVector:
    """hf_diff between the decision step and its cached predecessor, plus the
    spectral hf_ratio of the decision-step image at analysis resolution."""
    if not 2 <= decision_step <= cfg.steps:
        raise ValueError(f"decision_step must be in 2..{cfg.steps}, got {decision_step}")
    _, _, i_n = step_images(target, cfg, decision_step)
    _, _, i_prev = step_images(target, cfg, decision_step - 1)
    diff = hf_diff(i_n, i_prev, analysis_size)
    ratio = hf_ratio(resize_area(i_n, analysis_size, analysis_size), hf_params)
    return FeatureVector(hf_diff=diff, hf_ratio=ratio)
