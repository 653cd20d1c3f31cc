import math

import numpy as np
import pytest

from conftest import FROZEN_PIPELINE, FROZEN_TRACE
from freqskip.corpus import default_corpus, family_a, family_b
from freqskip.decision import Standardizer, TrainedModel, predict
from freqskip.features import decision_features
from freqskip.generator import TargetSpec, TraceConfig, generate_trace, synth_target
from freqskip.labeling import assign_label, ordered_ladder_ids
from freqskip.pipeline import (
    PipelineConfig,
    evaluate,
    feature_reliability,
    generalization_check,
    run_accelerated,
    train_from_samples,
)
from freqskip.strategies import Strategy, apply_strategy


def constant_model(ident: str) -> TrainedModel:
    """A logreg that always answers `ident` (single-class softmax)."""
    return TrainedModel(
        kind="logreg",
        classes=(ident,),
        standardizer=Standardizer.identity(2),
        weights=np.zeros((1, 2)),
        biases=np.zeros(1),
    )


@pytest.fixture(scope="module")
def mini_model(frozen_records):
    order = ordered_ladder_ids(FROZEN_TRACE, FROZEN_PIPELINE)

    class _S:
        def __init__(self, features, label):
            self.features = features
            self.label = label

    samples = [_S(r.features, assign_label(r.ssims, order, 0.84)) for r in frozen_records[:80]]
    return train_from_samples(samples, tuple(FROZEN_PIPELINE.ladder_ids()), "logreg")


class TestPipelineConfig:
    def test_defaults_validate(self):
        FROZEN_PIPELINE.validate_for(FROZEN_TRACE)

    def test_decision_step_bounds(self):
        with pytest.raises(ValueError):
            PipelineConfig(decision_step=1).validate_for(FROZEN_TRACE)
        with pytest.raises(ValueError):
            PipelineConfig(decision_step=12).validate_for(FROZEN_TRACE)

    def test_analysis_must_fit_cached_step(self):
        with pytest.raises(ValueError, match="analysis_size"):
            PipelineConfig(analysis_size=160).validate_for(FROZEN_TRACE)

    def test_ladder_must_fit_eligible_steps(self):
        with pytest.raises(ValueError, match="eligible"):
            PipelineConfig(
                ladder=(Strategy.skip(4), Strategy.none()), eligible_steps=3
            ).validate_for(FROZEN_TRACE)

    def test_ladder_requires_none(self):
        with pytest.raises(ValueError, match="none"):
            PipelineConfig(ladder=(Strategy.skip(1),))


class TestRunAccelerated:
    def test_none_model_reproduces_baseline(self):
        target = synth_target(TargetSpec(seed=4, blobs=3), 256)
        trace = generate_trace(target, FROZEN_TRACE)
        out, report = run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, constant_model("none"))
        assert np.array_equal(out, trace.final)
        assert report.strategy == "none"
        assert report.speedup == 1.0 / 1.005

    def test_alpha_zero_uncond_bit_identical_cheaper(self):
        cfg = TraceConfig(seed=4, gap_alpha=0.0)
        target = synth_target(TargetSpec(seed=4, blobs=3), 256)
        base, base_report = run_accelerated(target, cfg, FROZEN_PIPELINE, constant_model("none"))
        out, report = run_accelerated(target, cfg, FROZEN_PIPELINE, constant_model("uncond_3"))
        assert np.array_equal(out, base)
        assert report.cost < base_report.cost

    def test_force_strategy_overrides_model(self):
        target = synth_target(TargetSpec(seed=4, blobs=3), 256)
        out_forced, report = run_accelerated(
            target, FROZEN_TRACE, FROZEN_PIPELINE, None, force_strategy=Strategy.skip(3)
        )
        out_direct, _ = apply_strategy(target, FROZEN_TRACE, Strategy.skip(3))
        assert np.array_equal(out_forced, out_direct)
        assert report.strategy == "skip_3"

    def test_cost_audit_exact(self):
        target = synth_target(TargetSpec(seed=6, blobs=2), 256)
        cm = FROZEN_PIPELINE.cost_model(FROZEN_TRACE)
        for strategy in FROZEN_PIPELINE.ladder:
            _, report = run_accelerated(
                target, FROZEN_TRACE, FROZEN_PIPELINE, None, force_strategy=strategy
            )
            executed = math.fsum(
                m * w for m, w in zip(cm.step_multipliers(strategy), cm.weights)
            )
            assert report.cost == executed + FROZEN_PIPELINE.overhead * cm.baseline_cost

    def test_speedup_floor(self, mini_model):
        target = synth_target(TargetSpec(seed=8, blobs=2, noise_amp=0.2, noise_scale=0.6), 256)
        _, report = run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, mini_model)
        assert report.speedup >= 1.0 / (1.0 + FROZEN_PIPELINE.overhead)

    def test_deterministic_report(self, mini_model):
        target = synth_target(TargetSpec(seed=9, blobs=2, noise_amp=0.15, noise_scale=0.8), 256)
        r1 = run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, mini_model, compute_baseline=True)
        r2 = run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, mini_model, compute_baseline=True)
        assert np.array_equal(r1[0], r2[0])
        assert r1[1] == r2[1]

    def test_production_mode_skips_baseline(self, mini_model):
        target = synth_target(TargetSpec(seed=9, blobs=2), 256)
        _, report = run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, mini_model)
        assert report.ssim is None and report.ssim_hf is None

    def test_model_ladder_mismatch(self):
        target = synth_target(TargetSpec(seed=4, blobs=3), 256)
        with pytest.raises(ValueError, match="outside the ladder"):
            run_accelerated(target, FROZEN_TRACE, FROZEN_PIPELINE, constant_model("skip_9"))

    def test_safety_floor_bounded_by_most_aggressive(self, frozen_records, frozen_targets, mini_model):
        for record, target in zip(frozen_records[:40], frozen_targets[:40]):
            _, report = run_accelerated(
                target, FROZEN_TRACE, FROZEN_PIPELINE, mini_model, compute_baseline=True
            )
            assert report.ssim >= record.ssims["skip_3"] - 1e-4


class TestFixedHybridSchedule:
    def test_hybrid_runs_with_earlier_decision_step(self):
        # skip the final two steps, replace the unconditional branch on the
        # two before them; needs the decision moved ahead of the touched range
        pcfg = PipelineConfig(
            decision_step=8,
            analysis_size=96,
            eligible_steps=4,
            ladder=(Strategy.hybrid(2, 2), Strategy.none()),
            hf=FROZEN_PIPELINE.hf,
        )
        pcfg.validate_for(FROZEN_TRACE)
        target = synth_target(TargetSpec(seed=1, blobs=3), 256)
        out, report = run_accelerated(
            target, FROZEN_TRACE, pcfg, None, force_strategy=Strategy.hybrid(2, 2)
        )
        assert out.shape == (256, 256)
        assert report.strategy == "hybrid_2_2"
        assert report.speedup > 2.5  # both tail steps skipped, two halved


class TestEvaluate:
    def test_alpha_zero_corpus_mean_ssim_one(self):
        cfg = TraceConfig(seed=0, gap_alpha=0.0)
        specs = default_corpus(4, seed=1)
        result = evaluate(specs, cfg, FROZEN_PIPELINE, constant_model("uncond_3"))
        assert result.mean_ssim == 1.0

    def test_histogram_sums_to_corpus(self, mini_model):
        specs = default_corpus(8, seed=2)
        result = evaluate(specs, FROZEN_TRACE, FROZEN_PIPELINE, mini_model)
        assert sum(result.histogram.values()) == 8

    def test_csv_round_trip_consistency(self, tmp_path, mini_model):
        specs = default_corpus(6, seed=3)
        result = evaluate(specs, FROZEN_TRACE, FROZEN_PIPELINE, mini_model)
        path = tmp_path / "eval.csv"
        result.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "sample_id,strategy,hf_diff,hf_ratio,ssim,ssim_hf,cost,speedup"
        ssims = [float(line.split(",")[4]) for line in lines[1:]]
        assert float(np.mean(ssims)) == pytest.approx(result.mean_ssim, abs=1e-9)

    def test_empty_corpus_rejected(self, mini_model):
        with pytest.raises(ValueError):
            evaluate([], FROZEN_TRACE, FROZEN_PIPELINE, mini_model)


class TestSelectionAccuracy:
    def test_held_out_split_agreement(self, frozen_records):
        from freqskip.decision import split_train_val

        order = ordered_ladder_ids(FROZEN_TRACE, FROZEN_PIPELINE)

        class _S:
            def __init__(self, features, label):
                self.features = features
                self.label = label

        samples = [_S(r.features, assign_label(r.ssims, order, 0.84)) for r in frozen_records]
        train_idx, val_idx = split_train_val(len(samples), 0.8, seed=0)
        model = train_from_samples([samples[i] for i in train_idx], tuple(FROZEN_PIPELINE.ladder_ids()), "logreg")
        agree = np.mean([predict(model, samples[i].features) == samples[i].label for i in val_idx])
        assert agree >= 0.8

    def test_robust_corpus_histogram_dominated_by_skips(self, mini_model):
        from freqskip.corpus import blob_corpus

        result = evaluate(blob_corpus(8, seed=0), FROZEN_TRACE, FROZEN_PIPELINE, mini_model)
        skips = sum(v for k, v in result.histogram.items() if k.startswith("skip_"))
        assert skips >= 7


class TestGeneralization:
    def test_same_family_warns_on_overlap(self):
        specs = family_a(16, seed=0)
        with pytest.warns(UserWarning, match="both corpora"):
            generalization_check(specs, specs, FROZEN_TRACE, FROZEN_PIPELINE, 0.84)

    def test_cross_family_transfer(self):
        report = generalization_check(
            family_a(40, seed=0), family_b(40, seed=0), FROZEN_TRACE, FROZEN_PIPELINE, 0.84
        )
        assert report.label_agreement >= 0.7
        assert report.model_mean_ssim >= 0.84 - 0.05
        assert report.ssim_gap == pytest.approx(
            report.oracle_mean_ssim - report.model_mean_ssim, abs=1e-12
        )


class TestFeatureReliability:
    def test_step9_ratio_tracks_final(self):
        specs = default_corpus(24, seed=0)
        corr, pairs = feature_reliability(specs, FROZEN_TRACE, FROZEN_PIPELINE)
        assert pairs.shape == (24, 2)
        assert corr >= 0.9

    def test_features_match_labeling_path(self, frozen_records, frozen_targets):
        record, target = frozen_records[0], frozen_targets[0]
        feats = decision_features(
            target,
            FROZEN_TRACE,
            FROZEN_PIPELINE.decision_step,
            FROZEN_PIPELINE.analysis_size,
            FROZEN_PIPELINE.hf,
        )
        assert feats == record.features
