"""The adaptive run loop: generate, decide at step N, accelerate, report.

A run executes the low-frequency steps 1..N, computes the two frequency
features from the decision-step image and the cached previous step, asks the
decision model for a strategy, and completes the remaining steps under it.
Reported cost counts every executed branch pass at its step weight (halved
steps count once, skipped steps not at all) plus a fixed decision-overhead
fraction of the baseline.

Evaluation mode additionally generates the non-accelerated baseline to score
SSIM / SSIM-HF against it; production mode skips that entirely.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .decision import FeatureVector, TrainedModel, predict, train_forest, train_logreg, train_tree, train_two_stage
from .features import decision_features
from .frequency import HFParams, hf_ratio
from .generator import TargetSpec, TraceConfig, synth_target
from .labeling import build_dataset
from .metrics import HfMaskParams, SsimParams, ssim, ssim_hf
from .strategies import DEFAULT_LADDER, CostModel, Strategy, apply_strategy, parse_strategy, speedup


@dataclass(frozen=True)
class PipelineConfig:
    """Decision-step placement, analysis parameters, and the strategy ladder."""

    decision_step: int = 9
    analysis_size: int = 128
    hf: HFParams = HFParams()
    ssim: SsimParams = SsimParams()
    hf_mask: HfMaskParams = HfMaskParams()
    ladder: tuple[Strategy, ...] = DEFAULT_LADDER
    eligible_steps: int = 3
    overhead: float = 0.005

    def __post_init__(self) -> None:
        if self.analysis_size < 3:
            raise ValueError(f"analysis_size must be >= 3, got {self.analysis_size}")
        if self.overhead < 0.0:
            raise ValueError(f"overhead must be >= 0, got {self.overhead}")
        if self.eligible_steps < 1:
            raise ValueError(f"eligible_steps must be >= 1, got {self.eligible_steps}")
        if not any(s.kind == "none" for s in self.ladder):
            raise ValueError("ladder must contain the 'none' strategy")

    def validate_for(self, cfg: TraceConfig) -> None:
        n = self.decision_step
        if not 2 <= n < cfg.steps:
            raise ValueError(f"decision_step must be in 2..{cfg.steps - 1}, got {n}")
        if self.eligible_steps > cfg.steps - n:
            raise ValueError(
                f"eligible_steps={self.eligible_steps} overlaps the decision step "
                f"(only {cfg.steps - n} steps follow step {n})"
            )
        if self.analysis_size > cfg.schedule[n - 2]:
            raise ValueError(
                f"analysis_size={self.analysis_size} exceeds the step {n - 1} "
                f"resolution {cfg.schedule[n - 2]}"
            )
        for strategy in self.ladder:
            strategy.validate_for(cfg.steps)
            if strategy.affected_steps > self.eligible_steps:
                raise ValueError(
                    f"ladder strategy {strategy.ident} touches {strategy.affected_steps} steps "
                    f"but only the last {self.eligible_steps} are eligible"
                )

    def ladder_ids(self) -> list[str]:
        return [s.ident for s in self.ladder]

    def cost_model(self, cfg: TraceConfig) -> CostModel:
        return CostModel(weights=cfg.cost_weights, overhead=self.overhead)


@dataclass(frozen=True)
class RunReport:
    strategy: str
    features: FeatureVector
    cost: float
    speedup: float
    ssim: float | None = None
    ssim_hf: float | None = None


def _check_model(model: TrainedModel, pcfg: PipelineConfig) -> None:
    ladder = set(pcfg.ladder_ids())
    missing = [c for c in model.classes if c not in ladder]
    if missing:
        raise ValueError(f"model predicts classes outside the ladder: {missing}")


def run_accelerated(
    target: np.ndarray,
    cfg: TraceConfig,
    pcfg: PipelineConfig,
    model: TrainedModel | None,
    force_strategy: Strategy | None = None,
    compute_baseline: bool = False,
) -> tuple[np.ndarray, RunReport]:
    """One adaptive generation run; returns the output image and its report."""
    pcfg.validate_for(cfg)
    if model is None and force_strategy is None:
        raise ValueError("need a decision model or a forced strategy")
    if model is not None:
        _check_model(model, pcfg)
    feats = decision_features(target, cfg, pcfg.decision_step, pcfg.analysis_size, pcfg.hf)
    if force_strategy is not None:
        force_strategy.validate_for(cfg.steps)
        strategy = force_strategy
    else:
        strategy = parse_strategy(predict(model, feats))
    out, raw_cost = apply_strategy(target, cfg, strategy)
    cm = pcfg.cost_model(cfg)
    cost = raw_cost + pcfg.overhead * cm.baseline_cost
    spd = speedup(cm, strategy)
    ssim_val = ssim_hf_val = None
    if compute_baseline:
        baseline, _ = apply_strategy(target, cfg, Strategy.none())
        ssim_val = ssim(baseline, out, pcfg.ssim)
        ssim_hf_val = ssim_hf(baseline, out, pcfg.ssim, pcfg.hf_mask)
    report = RunReport(
        strategy=strategy.ident,
        features=feats,
        cost=cost,
        speedup=spd,
        ssim=ssim_val,
        ssim_hf=ssim_hf_val,
    )
    return out, report


EVAL_CSV_HEADER = "sample_id,strategy,hf_diff,hf_ratio,ssim,ssim_hf,cost,speedup"


@dataclass
class EvalResult:
    ids: list[str]
    reports: list[RunReport]

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r.ssim for r in self.reports]))

    @property
    def min_ssim(self) -> float:
        return float(np.min([r.ssim for r in self.reports]))

    @property
    def mean_ssim_hf(self) -> float:
        return float(np.mean([r.ssim_hf for r in self.reports]))

    @property
    def mean_speedup(self) -> float:
        return float(np.mean([r.speedup for r in self.reports]))

    @property
    def histogram(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.reports:
            counts[r.strategy] = counts.get(r.strategy, 0) + 1
        return dict(sorted(counts.items()))

    def summary(self) -> dict:
        return {
            "samples": len(self.reports),
            "mean_ssim": self.mean_ssim,
            "min_ssim": self.min_ssim,
            "mean_ssim_hf": self.mean_ssim_hf,
            "mean_speedup": self.mean_speedup,
            "histogram": self.histogram,
        }

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(EVAL_CSV_HEADER + "\n")
            for sid, r in zip(self.ids, self.reports):
                fh.write(
                    f"{sid},{r.strategy},{r.features.hf_diff!r},{r.features.hf_ratio!r},"
                    f"{r.ssim!r},{r.ssim_hf!r},{r.cost!r},{r.speedup!r}\n"
                )


def evaluate(
    specs: list[TargetSpec],
    cfg: TraceConfig,
    pcfg: PipelineConfig,
    model: TrainedModel,
    ids: list[str] | None = None,
) -> EvalResult:
    """Run the pipeline over a corpus with baseline scoring per sample."""
    if not specs:
        raise ValueError("spec list must not be empty")
    if ids is None:
        ids = [f"s{i:04d}" for i in range(len(specs))]
    size = cfg.full_size
    reports = []
    for spec in specs:
        target = synth_target(spec, size)
        _, report = run_accelerated(target, cfg, pcfg, model, compute_baseline=True)
        reports.append(report)
    return EvalResult(ids=list(ids), reports=reports)


_TRAINERS = {
    "logreg": train_logreg,
    "tree": train_tree,
    "forest": train_forest,
    "two_stage": train_two_stage,
}


def train_from_samples(samples, classes: tuple[str, ...], kind: str = "logreg") -> TrainedModel:
    """Fit a decision model of the given kind from labeled samples."""
    if kind not in _TRAINERS:
        raise ValueError(f"unknown model kind {kind!r} (expected one of {sorted(_TRAINERS)})")
    x = np.array([s.features.as_array() for s in samples])
    y = [s.label for s in samples]
    return _TRAINERS[kind](x, y, classes)


@dataclass(frozen=True)
class GeneralizationReport:
    model_mean_ssim: float
    oracle_mean_ssim: float
    ssim_gap: float
    label_agreement: float
    histogram: dict[str, int]


def generalization_check(
    train_specs: list[TargetSpec],
    heldout_specs: list[TargetSpec],
    cfg: TraceConfig,
    pcfg: PipelineConfig,
    tau: float,
    kind: str = "logreg",
) -> GeneralizationReport:
    """Train on one recipe family, evaluate on another without retraining.

    Reports the mean SSIM achieved by the transferred model, the labeling
    oracle's mean SSIM on the held-out family (the upper bound a perfect
    selector could reach under tau), their gap, and how often the model picks
    exactly the oracle label.
    """
    overlap = set(map(repr, train_specs)) & set(map(repr, heldout_specs))
    if overlap:
        warnings.warn(f"{len(overlap)} recipes appear in both corpora; the check is not out-of-family")
    train_samples = build_dataset(train_specs, cfg, pcfg, tau)
    model = train_from_samples(train_samples, tuple(pcfg.ladder_ids()), kind)
    heldout_samples = build_dataset(heldout_specs, cfg, pcfg, tau)
    agree = 0
    model_ssims = []
    oracle_ssims = []
    histogram: dict[str, int] = {}
    for sample in heldout_samples:
        chosen = predict(model, sample.features)
        histogram[chosen] = histogram.get(chosen, 0) + 1
        if chosen == sample.label:
            agree += 1
        model_ssims.append(sample.ssims[chosen])
        oracle_ssims.append(sample.ssims[sample.label])
    model_mean = float(np.mean(model_ssims))
    oracle_mean = float(np.mean(oracle_ssims))
    return GeneralizationReport(
        model_mean_ssim=model_mean,
        oracle_mean_ssim=oracle_mean,
        ssim_gap=oracle_mean - model_mean,
        label_agreement=agree / len(heldout_samples),
        histogram=dict(sorted(histogram.items())),
    )


def feature_reliability(
    specs: list[TargetSpec], cfg: TraceConfig, pcfg: PipelineConfig
) -> tuple[float, np.ndarray]:
    """Pearson correlation between the decision-step hf_ratio (analysis
    resolution) and the hf_ratio of the final full-resolution baseline.

    Returns (correlation, pairs) with pairs of shape (n, 2).
    """
    size = cfg.full_size
    pairs = []
    for spec in specs:
        target = synth_target(spec, size)
        feats = decision_features(target, cfg, pcfg.decision_step, pcfg.analysis_size, pcfg.hf)
        baseline, _ = apply_strategy(target, cfg, Strategy.none())
        final_ratio = hf_ratio(baseline, pcfg.hf)
        pairs.append((feats.hf_ratio, final_ratio))
    arr = np.array(pairs)
    corr = float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])
    return corr, arr
