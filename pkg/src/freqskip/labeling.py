"""Ground-truth labels from exhaustive strategy simulation.

Each sample is labeled with the most aggressive ladder strategy whose output
keeps SSIM against the non-accelerated baseline at or above a threshold tau.
'none' always qualifies (its SSIM is exactly 1), so every sample gets a
label.  The same simulation also splits a corpus into frequency-sensitive
and frequency-robust halves by probing the most aggressive skip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable
import os
import warnings

import numpy as np

from .decision import FeatureVector
from .features import decision_features
from .generator import TargetSpec, TraceConfig, synth_target
from .metrics import SsimParams, ssim
from .strategies import CostModel, Strategy, apply_strategy, ladder_order

if TYPE_CHECKING:
    from .pipeline import PipelineConfig

FEATURES_HEADER = "sample_id,hf_diff,hf_ratio"
LABELS_HEADER = "sample_id,hf_diff,hf_ratio,label"


@dataclass(frozen=True)
class LabeledSample:
    sample_id: str
    features: FeatureVector
    label: str
    ssims: dict[str, float]


def default_ids(n: int) -> list[str]:
    return [f"s{i:04d}" for i in range(n)]


def _output_key(strategy: Strategy, steps: int) -> tuple[int, bool]:
    # strategies that stop at the same step with the same branch replacement
    # emit identical images, so their SSIMs can be shared
    stop = steps - strategy.skip_n if strategy.kind in ("skip", "hybrid") else steps
    replaced = strategy.kind in ("uncond", "hybrid")
    return stop, replaced


def strategy_fidelity(
    target: np.ndarray, cfg: TraceConfig, ladder: Iterable[Strategy], ssim_params: SsimParams
) -> dict[str, float]:
    """SSIM of each ladder strategy's output against the baseline output."""
    baseline, _ = apply_strategy(target, cfg, Strategy.none())
    cache: dict[tuple[int, bool], float] = {}
    out: dict[str, float] = {}
    for strategy in ladder:
        if strategy.kind == "none":
            out[strategy.ident] = ssim(baseline, baseline, ssim_params)
            continue
        key = _output_key(strategy, cfg.steps)
        if key not in cache:
            img, _ = apply_strategy(target, cfg, strategy)
            cache[key] = ssim(baseline, img, ssim_params)
        out[strategy.ident] = cache[key]
    return out


def assign_label(ssims: dict[str, float], ordered_ids: list[str], tau: float) -> str:
    """First strategy in aggressiveness order whose SSIM is at least tau."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    for ident in ordered_ids:
        if ssims[ident] >= tau:
            return ident
    return "none"


def ordered_ladder_ids(cfg: TraceConfig, pcfg: "PipelineConfig") -> list[str]:
    cm = CostModel(weights=cfg.cost_weights, overhead=pcfg.overhead)
    return [s.ident for s in ladder_order(cm, pcfg.ladder)]


def label_sample(
    target: np.ndarray,
    cfg: TraceConfig,
    pcfg: "PipelineConfig",
    tau: float,
    sample_id: str = "",
) -> LabeledSample:
    """Simulate every ladder strategy and label by first-above-threshold."""
    ssims = strategy_fidelity(target, cfg, pcfg.ladder, pcfg.ssim)
    label = assign_label(ssims, ordered_ladder_ids(cfg, pcfg), tau)
    feats = decision_features(target, cfg, pcfg.decision_step, pcfg.analysis_size, pcfg.hf)
    return LabeledSample(sample_id=sample_id, features=feats, label=label, ssims=ssims)


def write_features_csv(samples: list[LabeledSample], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(FEATURES_HEADER + "\n")
        for s in samples:
            fh.write(f"{s.sample_id},{s.features.hf_diff!r},{s.features.hf_ratio!r}\n")


def write_labels_csv(samples: list[LabeledSample], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(LABELS_HEADER + "\n")
        for s in samples:
            fh.write(f"{s.sample_id},{s.features.hf_diff!r},{s.features.hf_ratio!r},{s.label}\n")


def read_feature_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray, list[str] | None]:
    """Read a feature or label CSV; returns (ids, features, labels or None)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] not in (FEATURES_HEADER, LABELS_HEADER):
        raise ValueError(f"{os.fspath(path)}: unexpected CSV header {lines[0] if lines else '<empty>'!r}")
    has_labels = lines[0] == LABELS_HEADER
    ids, rows, labels = [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != (4 if has_labels else 3):
            raise ValueError(f"{os.fspath(path)}: malformed row {ln!r}")
        ids.append(parts[0])
        rows.append((float(parts[1]), float(parts[2])))
        if has_labels:
            labels.append(parts[3])
    return ids, np.array(rows, dtype=np.float64), (labels if has_labels else None)


def build_dataset(
    specs: list[TargetSpec],
    cfg: TraceConfig,
    pcfg: "PipelineConfig",
    tau: float,
    features_path: str | os.PathLike | None = None,
    labels_path: str | os.PathLike | None = None,
    ids: list[str] | None = None,
) -> list[LabeledSample]:
    """Label every spec in order; optionally emit the feature/label CSVs."""
    if not specs:
        raise ValueError("spec list must not be empty")
    if ids is None:
        ids = default_ids(len(specs))
    if len(ids) != len(specs):
        raise ValueError(f"{len(ids)} ids for {len(specs)} specs")
    size = cfg.full_size
    samples = [
        label_sample(synth_target(spec, size), cfg, pcfg, tau, sample_id=sid)
        for sid, spec in zip(ids, specs)
    ]
    if len({s.label for s in samples}) < 2:
        warnings.warn("corpus produced fewer than 2 distinct labels; classifiers need label diversity")
    if features_path is not None:
        write_features_csv(samples, features_path)
    if labels_path is not None:
        write_labels_csv(samples, labels_path)
    return samples


def sensitivity_split(
    specs: list[TargetSpec],
    cfg: TraceConfig,
    tau_s: float,
    ssim_params: SsimParams = SsimParams(),
    probe: Strategy = Strategy.skip(3),
    ids: list[str] | None = None,
) -> tuple[list[str], list[str]]:
    """Partition ids into (frequency-sensitive, frequency-robust).

    A sample is sensitive when the probe strategy (the most aggressive skip)
    drops its SSIM below tau_s.  The endpoints are allowed: 0 marks everything
    robust and 1 marks everything sensitive (for any imperfect probe).
    """
    if not 0.0 <= tau_s <= 1.0:
        raise ValueError(f"tau_s must be in [0, 1], got {tau_s}")
    if ids is None:
        ids = default_ids(len(specs))
    size = cfg.full_size
    sensitive, robust = [], []
    for sid, spec in zip(ids, specs):
        target = synth_target(spec, size)
        baseline, _ = apply_strategy(target, cfg, Strategy.none())
        probed, _ = apply_strategy(target, cfg, probe)
        if ssim(baseline, probed, ssim_params) < tau_s:
            sensitive.append(sid)
        else:
            robust.append(sid)
    return sensitive, robust
