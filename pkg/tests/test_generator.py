import math

import numpy as np
import pytest

from freqskip.frequency import HFParams, hf_ratio
from freqskip.generator import (
    DEFAULT_SCHEDULE,
    TargetSpec,
    TraceConfig,
    branch_gap,
    decode_final,
    default_cost_weights,
    generate_trace,
    load_trace,
    save_trace,
    synth_target,
)
from freqskip.image import save_image
from freqskip.metrics import l1_mean, ssim

from oracles import hf_ratio_naive


class TestCostWeights:
    def test_late_share_exact(self):
        w = default_cost_weights()
        assert (w[-3] + w[-2] + w[-1]) == 0.69
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)

    def test_proportional_to_squared_resolution_within_groups(self):
        w = default_cost_weights()
        r = DEFAULT_SCHEDULE
        for i in range(7):  # early group, skip the remainder-pinned last entry
            assert w[i] / w[0] == pytest.approx((r[i] / r[0]) ** 2, rel=1e-9)
        assert w[10] / w[9] == pytest.approx((r[10] / r[9]) ** 2, rel=1e-9)

    def test_custom_share(self):
        w = default_cost_weights(late_share=0.5)
        assert math.fsum(w[-3:]) == pytest.approx(0.5, abs=1e-12)


class TestTraceConfig:
    def test_defaults_valid(self):
        cfg = TraceConfig()
        assert cfg.steps == 12
        assert cfg.full_size == 256
        assert len(cfg.cost_weights) == 12

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"steps": 3, "schedule": (8, 16, 32)},
            {"schedule": (8, 16, 24, 32, 48, 64, 96, 128, 160, 192, 224, 224)},
            {"gap_gamma": 1.0},
            {"gap_alpha": -0.1},
            {"cost_weights": (1.0,) * 12},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TraceConfig(**kwargs)


class TestSynthTarget:
    def test_deterministic(self):
        spec = TargetSpec(seed=3, blobs=4, noise_amp=0.2, noise_scale=0.8)
        a = synth_target(spec, 128)
        b = synth_target(spec, 128)
        assert np.array_equal(a, b)

    def test_emitted_range(self):
        spec = TargetSpec(seed=9, blobs=5, blob_amp=0.4, sine_cycles=40.0, sine_amp=0.5, noise_amp=0.3)
        img = synth_target(spec, 64)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_blob_recipe_low_hf(self):
        img = synth_target(TargetSpec(seed=7, blobs=3, blob_sigma=40.0, blob_amp=0.3), 256)
        assert hf_ratio(img, HFParams(rho=0.25)) < 0.1

    def test_sine_recipe_high_hf_with_oracle(self):
        # 77.3 cycles at size 128 sits far outside the rho=0.25 disc
        img = synth_target(TargetSpec(seed=5, blobs=0, sine_cycles=77.3, sine_amp=0.4, sine_angle=0.9), 128)
        value = hf_ratio(img, HFParams(rho=0.25))
        assert value > 0.5
        assert value == pytest.approx(hf_ratio_naive(img, 0.25, 1e-8), abs=1e-6)

    def test_octave_persistence_shifts_spectrum(self):
        coarse = synth_target(
            TargetSpec(seed=2, blobs=0, noise_amp=0.2, noise_scale=0.6, noise_octaves=5, noise_persistence=2.5),
            128,
        )
        fine = synth_target(
            TargetSpec(seed=2, blobs=0, noise_amp=0.2, noise_scale=0.6, noise_octaves=5, noise_persistence=0.5),
            128,
        )
        assert hf_ratio(fine) > hf_ratio(coarse)

    def test_file_backed_spec(self, tmp_path, rng):
        img = rng.random((64, 64))
        path = tmp_path / "t.f32"
        save_image(img, path, "rawf32")
        out = synth_target(TargetSpec(path=str(path)), 32)
        assert out.shape == (32, 32)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            TargetSpec(blob_amp=1.5)
        with pytest.raises(ValueError):
            TargetSpec(noise_octaves=0)


@pytest.fixture(scope="module")
def blob_target():
    return synth_target(TargetSpec(seed=7, blobs=3, blob_sigma=40.0, blob_amp=0.3), 256)


@pytest.fixture(scope="module")
def default_trace(blob_target):
    return generate_trace(blob_target, TraceConfig(seed=3))


class TestGenerateTrace:
    def test_reproducible_bit_identical(self, blob_target):
        cfg = TraceConfig(seed=11)
        t1 = generate_trace(blob_target, cfg)
        t2 = generate_trace(blob_target, cfg)
        for a, b in zip(t1.records, t2.records):
            assert np.array_equal(a.cond, b.cond)
            assert np.array_equal(a.uncond, b.uncond)
            assert np.array_equal(a.combined, b.combined)

    def test_step_dimensions_and_costs(self, default_trace):
        cfg = default_trace.config
        for k in range(1, cfg.steps + 1):
            rec = default_trace.step(k)
            r = cfg.schedule[k - 1]
            assert rec.combined.shape == (r, r)
            assert rec.weight == cfg.cost_weights[k - 1]
        assert default_trace.baseline_cost == pytest.approx(2.0, abs=1e-12)

    def test_alpha_zero_branches_equal(self, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=3, gap_alpha=0.0))
        for rec in trace.records:
            assert np.array_equal(rec.cond, rec.uncond)
            assert np.array_equal(rec.combined, np.clip(rec.cond, 0.0, 1.0))

    def test_guidance_one_emits_conditional(self, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=3, guidance=1.0))
        for rec in trace.records:
            assert np.array_equal(rec.combined, np.clip(rec.cond, 0.0, 1.0))

    def test_combined_clamped(self, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=3, gap_alpha=0.4))
        for rec in trace.records:
            assert rec.combined.min() >= 0.0 and rec.combined.max() <= 1.0

    def test_wrong_target_size(self, rng):
        with pytest.raises(ValueError):
            generate_trace(rng.random((64, 64)), TraceConfig())


class TestBranchGap:
    def test_alpha_zero_gap_zero(self, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=0, gap_alpha=0.0))
        assert all(branch_gap(trace, k) == 0.0 for k in range(1, 13))

    def test_strictly_decreasing_over_seeds(self, blob_target):
        for seed in range(20):
            trace = generate_trace(blob_target, TraceConfig(seed=seed))
            gaps = [branch_gap(trace, k) for k in range(1, 13)]
            assert all(a > b for a, b in zip(gaps, gaps[1:])), f"seed {seed}"

    def test_decay_ratio_near_gamma(self, blob_target):
        ratios = []
        for seed in range(10):
            trace = generate_trace(blob_target, TraceConfig(seed=seed))
            gaps = [branch_gap(trace, k) for k in range(1, 13)]
            ratios.extend(gaps[k + 1] / gaps[k] for k in range(2, 11))
        for r in ratios:
            assert abs(r - 0.6) / 0.6 < 0.2

    def test_last_below_first(self, default_trace):
        assert branch_gap(default_trace, 12) < branch_gap(default_trace, 1)

    def test_out_of_range(self, default_trace):
        with pytest.raises(ValueError):
            branch_gap(default_trace, 0)
        with pytest.raises(ValueError):
            branch_gap(default_trace, 13)


class TestDecodeFinal:
    def test_final_step_identity(self, default_trace):
        assert np.array_equal(decode_final(default_trace, 12), default_trace.final)

    def test_blob_early_stop_high_fidelity(self, default_trace):
        out = decode_final(default_trace, 9)
        assert ssim(out, default_trace.final) >= 0.95

    def test_high_frequency_target_degrades_more(self, default_trace):
        fine = synth_target(
            TargetSpec(seed=4, blobs=1, noise_amp=0.25, noise_scale=0.5, noise_octaves=4, noise_persistence=0.5),
            256,
        )
        fine_trace = generate_trace(fine, default_trace.config)
        blob_ssim = ssim(decode_final(default_trace, 9), default_trace.final)
        fine_ssim = ssim(decode_final(fine_trace, 9), fine_trace.final)
        assert fine_ssim < blob_ssim

    def test_l1_plateau_non_increasing(self, default_trace):
        l1s = [l1_mean(decode_final(default_trace, k), default_trace.final) for k in range(1, 13)]
        assert all(a >= b for a, b in zip(l1s, l1s[1:]))

    def test_ssim_monotone_interpolation_only(self, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=3, gap_alpha=0.0))
        vals = [ssim(decode_final(trace, k), trace.final) for k in range(1, 13)]
        assert all(b >= a - 1e-4 for a, b in zip(vals, vals[1:]))

    def test_ssim_monotone_default_from_step_two(self, default_trace):
        # step 1 carries the largest perturbation (alpha * gamma**0); its dip
        # can exceed the interpolation tolerance, later steps stay monotone
        vals = [ssim(decode_final(default_trace, k), default_trace.final) for k in range(1, 13)]
        assert all(b >= a - 1e-4 for a, b in zip(vals[1:], vals[2:]))

    def test_out_of_range(self, default_trace):
        with pytest.raises(ValueError):
            decode_final(default_trace, 0)


class TestTraceIO:
    def test_round_trip(self, tmp_path, blob_target):
        cfg = TraceConfig(seed=5)
        trace = generate_trace(blob_target, cfg)
        save_trace(trace, tmp_path / "trace")
        back = load_trace(tmp_path / "trace")
        assert back.config == cfg
        # files store float32, so compare at that precision
        for a, b in zip(trace.records, back.records):
            assert np.array_equal(b.combined, a.combined.astype(np.float32).astype(np.float64))
        assert np.array_equal(back.target, trace.target.astype(np.float32).astype(np.float64))

    def test_layout(self, tmp_path, blob_target):
        trace = generate_trace(blob_target, TraceConfig(seed=5))
        save_trace(trace, tmp_path / "trace")
        names = {p.name for p in (tmp_path / "trace").iterdir()}
        assert "manifest.json" in names and "target.f32" in names
        assert {"cond_01.f32", "uncond_01.f32", "comb_01.f32", "comb_12.f32"} <= names
