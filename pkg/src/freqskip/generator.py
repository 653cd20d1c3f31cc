"""Deterministic coarse-to-fine toy generator with guided branch pairs.

The generator emits K step images of increasing resolution.  At step k the
conditional branch is the area-downsampled target, the unconditional branch
adds a seeded, box-smoothed perturbation whose amplitude decays
geometrically with k, and the emitted image combines the branches with a
guidance factor:

    C_k = resize_area(target, r_k, r_k)
    U_k = C_k + alpha * gamma**(k-1) * box3(noise_k)      (never clamped)
    I_k = clip(U_k + g * (C_k - U_k), 0, 1)

Per-step compute is modeled by normalized weights w_k, one unit per branch,
calibrated so the last three steps carry a fixed share (0.69) of the
baseline cost.  Identical (target, config) pairs always produce
bit-identical traces.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .image import load_image, require_gray, resize_area, resize_bilinear, save_image, to_grayscale

DEFAULT_SCHEDULE = (8, 16, 24, 32, 48, 64, 96, 128, 160, 192, 224, 256)
LATE_STEPS = 3
LATE_COST_SHARE = 0.69

_TARGET_STREAM = 0
_NOISE_STREAM = 1


def default_cost_weights(
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE,
    late_steps: int = LATE_STEPS,
    late_share: float = LATE_COST_SHARE,
) -> tuple[float, ...]:
    """Per-step cost weights: proportional to r_k**2 within the early and late
    groups, each group rescaled so the late group sums to late_share exactly.
    """
    if not 0 < late_steps < len(schedule):
        raise ValueError(f"late_steps must be in (0, {len(schedule)}), got {late_steps}")
    if not 0.0 < late_share < 1.0:
        raise ValueError(f"late_share must be in (0, 1), got {late_share}")

    def scaled(group: list[int], total: float) -> list[float]:
        sq = [float(r) * r for r in group]
        s = math.fsum(sq)
        w = [total * v / s for v in sq]
        # pin the group sum exactly by assigning the remainder to the last entry
        w[-1] = total - math.fsum(w[:-1])
        return w

    early = scaled(list(schedule[:-late_steps]), 1.0 - late_share)
    late = scaled(list(schedule[-late_steps:]), late_share)
    return tuple(early + late)


@dataclass(frozen=True)
class TraceConfig:
    """Shape of the toy generation process and its cost model."""

    steps: int = 12
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    guidance: float = 2.0
    gap_alpha: float = 0.15
    gap_gamma: float = 0.6
    seed: int = 0
    cost_weights: tuple[float, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.steps < 4:
            raise ValueError(f"steps must be >= 4, got {self.steps}")
        if len(self.schedule) != self.steps:
            raise ValueError(
                f"schedule length {len(self.schedule)} does not match steps={self.steps}"
            )
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])) or self.schedule[0] < 1:
            raise ValueError("schedule must be strictly increasing and positive")
        if not 0.0 < self.gap_gamma < 1.0:
            raise ValueError(f"gap_gamma must be in (0, 1), got {self.gap_gamma}")
        if self.gap_alpha < 0.0:
            raise ValueError(f"gap_alpha must be >= 0, got {self.gap_alpha}")
        if self.cost_weights is None:
            late = min(LATE_STEPS, self.steps - 1)
            object.__setattr__(self, "cost_weights", default_cost_weights(self.schedule, late))
        if len(self.cost_weights) != self.steps:
            raise ValueError("cost_weights length must equal steps")
        if abs(math.fsum(self.cost_weights) - 1.0) > 1e-9:
            raise ValueError("cost_weights must sum to 1")

    @property
    def full_size(self) -> int:
        return self.schedule[-1]


@dataclass(frozen=True)
class TargetSpec:
    """Recipe for a synthetic target image (or a path to load one from).

    Procedural targets are built from a mid-gray base plus Gaussian blobs, an
    optional oriented sinusoid (cycles measured across the full image), and
    optional noise, then clipped to [0, 1].  ``noise_scale`` low-pass filters
    the noise field (Gaussian blur sigma in pixels, 0 keeps it white); the
    filtered field is rescaled to unit RMS so ``noise_amp`` sets its strength
    regardless of bandwidth.
    """

    path: str | None = None
    seed: int = 0
    blobs: int = 3
    blob_sigma: float = 30.0
    blob_amp: float = 0.3
    sine_cycles: float = 0.0
    sine_amp: float = 0.0
    sine_angle: float = 0.0
    noise_amp: float = 0.0
    noise_scale: float = 0.0
    noise_octaves: int = 1
    noise_persistence: float = 1.0

    def __post_init__(self) -> None:
        if self.path is None:
            if self.blobs < 0:
                raise ValueError(f"blobs must be >= 0, got {self.blobs}")
            if self.blob_sigma <= 0.0:
                raise ValueError(f"blob_sigma must be positive, got {self.blob_sigma}")
            for name in ("blob_amp", "sine_amp", "noise_amp"):
                v = getattr(self, name)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name} must be in [0, 1], got {v}")
            if self.sine_cycles < 0.0:
                raise ValueError(f"sine_cycles must be >= 0, got {self.sine_cycles}")
            if self.noise_scale < 0.0:
                raise ValueError(f"noise_scale must be >= 0, got {self.noise_scale}")
            if self.noise_octaves < 1:
                raise ValueError(f"noise_octaves must be >= 1, got {self.noise_octaves}")
            if self.noise_persistence <= 0.0:
                raise ValueError(f"noise_persistence must be positive, got {self.noise_persistence}")


def synth_target(spec: TargetSpec, size: int) -> np.ndarray:
    """Materialize a target image of the given square size.

    File-backed specs are loaded (and grayscaled/resized if needed);
    procedural specs are deterministic in (spec, seed).
    """
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    if spec.path is not None:
        img = load_image(spec.path)
        if img.ndim == 3:
            img = to_grayscale(img)
        if img.shape != (size, size):
            if img.shape[0] >= size and img.shape[1] >= size:
                img = resize_area(img, size, size)
            else:
                img = resize_bilinear(img, size, size)
        return img
    rng = np.random.default_rng((spec.seed, _TARGET_STREAM))
    yy, xx = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64), indexing="ij")
    img = np.full((size, size), 0.5)
    for i in range(spec.blobs):
        cy = rng.uniform(0.15, 0.85) * size
        cx = rng.uniform(0.15, 0.85) * size
        sig = spec.blob_sigma * rng.uniform(0.6, 1.4)
        amp = spec.blob_amp * rng.uniform(0.5, 1.0) * (1.0 if i % 2 == 0 else -1.0)
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        img = img + amp * np.exp(-d2 / (2.0 * sig * sig))
    if spec.sine_amp > 0.0 and spec.sine_cycles > 0.0:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        u = xx * np.cos(spec.sine_angle) + yy * np.sin(spec.sine_angle)
        img = img + spec.sine_amp * np.sin(2.0 * np.pi * spec.sine_cycles * u / size + phase)
    if spec.noise_amp > 0.0:
        field = np.zeros((size, size))
        for octave in range(spec.noise_octaves):
            layer = rng.standard_normal((size, size))
            sigma = spec.noise_scale * (2.0**octave)
            if sigma > 0.0:
                layer = _gaussian_blur(layer, sigma)
            rms = float(np.sqrt(np.mean(layer * layer)))
            field = field + (spec.noise_persistence**octave / rms) * layer
        field_rms = float(np.sqrt(np.mean(field * field)))
        img = img + spec.noise_amp * field / field_rms
    return np.clip(img, 0.0, 1.0)


def _gaussian_blur(x: np.ndarray, sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    k = k / k.sum()
    h, w = x.shape
    p = np.pad(x, radius, mode="reflect")
    horiz = k[0] * p[:, 0:w]
    for i in range(1, k.size):
        horiz = horiz + k[i] * p[:, i : i + w]
    out = k[0] * horiz[0:h, :]
    for i in range(1, k.size):
        out = out + k[i] * horiz[i : i + h, :]
    return out


def _box3(x: np.ndarray) -> np.ndarray:
    p = np.pad(x, 1, mode="edge")
    acc = p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
    acc = acc + p[1:-1, :-2] + p[1:-1, 1:-1] + p[1:-1, 2:]
    acc = acc + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    return acc / 9.0


def step_images(target: np.ndarray, cfg: TraceConfig, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Conditional, unconditional, and combined images for step k (1-based).

    The combined image is clamped to [0, 1]; the branches are not.
    """
    if not 1 <= k <= cfg.steps:
        raise ValueError(f"step {k} out of range 1..{cfg.steps}")
    r = cfg.schedule[k - 1]
    cond = resize_area(target, r, r)
    if cfg.gap_alpha == 0.0:
        uncond = cond.copy()
    else:
        noise = np.random.default_rng((cfg.seed, _NOISE_STREAM, k)).standard_normal((r, r))
        uncond = cond + cfg.gap_alpha * cfg.gap_gamma ** (k - 1) * _box3(noise)
    combined = np.clip(uncond + cfg.guidance * (cond - uncond), 0.0, 1.0)
    return cond, uncond, combined


@dataclass(frozen=True)
class StepRecord:
    cond: np.ndarray
    uncond: np.ndarray
    combined: np.ndarray
    weight: float


@dataclass(frozen=True)
class StepTrace:
    """All K step records plus the target and config that produced them."""

    config: TraceConfig
    target: np.ndarray
    records: tuple[StepRecord, ...]

    def step(self, k: int) -> StepRecord:
        if not 1 <= k <= self.config.steps:
            raise ValueError(f"step {k} out of range 1..{self.config.steps}")
        return self.records[k - 1]

    @property
    def final(self) -> np.ndarray:
        return self.records[-1].combined

    @property
    def baseline_cost(self) -> float:
        return math.fsum(2.0 * r.weight for r in self.records)


def generate_trace(target: np.ndarray, cfg: TraceConfig) -> StepTrace:
    """Run all K steps on a full-resolution square target."""
    target = require_gray(target, "target")
    size = cfg.full_size
    if target.shape != (size, size):
        raise ValueError(f"target must be {size}x{size} for this config, got {target.shape}")
    records = []
    for k in range(1, cfg.steps + 1):
        cond, uncond, combined = step_images(target, cfg, k)
        records.append(StepRecord(cond, uncond, combined, cfg.cost_weights[k - 1]))
    return StepTrace(config=cfg, target=target, records=tuple(records))


def branch_gap(trace: StepTrace, k: int) -> float:
    """Mean absolute difference between the branch images at step k."""
    rec = trace.step(k)
    return float(np.mean(np.abs(rec.cond - rec.uncond)))


def decode_final(trace: StepTrace, stop_step: int) -> np.ndarray:
    """Full-resolution output if generation stops at stop_step.

    Bilinear-upsamples the combined image of the stop step; at stop_step = K
    the final image is returned unchanged.
    """
    rec = trace.step(stop_step)
    size = trace.config.full_size
    if stop_step == trace.config.steps:
        return rec.combined
    return resize_bilinear(rec.combined, size, size)


def save_trace(trace: StepTrace, dirpath: str | os.PathLike) -> None:
    """Write a trace directory: manifest.json + per-step raw-float images."""
    os.makedirs(dirpath, exist_ok=True)
    cfg = trace.config
    manifest = {
        "steps": cfg.steps,
        "schedule": list(cfg.schedule),
        "seed": cfg.seed,
        "guidance": cfg.guidance,
        "gap_alpha": cfg.gap_alpha,
        "gap_gamma": cfg.gap_gamma,
        "cost_weights": list(cfg.cost_weights),
    }
    with open(os.path.join(dirpath, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_image(trace.target, os.path.join(dirpath, "target.f32"), "rawf32")
    for k in range(1, cfg.steps + 1):
        rec = trace.step(k)
        save_image(rec.cond, os.path.join(dirpath, f"cond_{k:02d}.f32"), "rawf32")
        save_image(rec.uncond, os.path.join(dirpath, f"uncond_{k:02d}.f32"), "rawf32")
        save_image(rec.combined, os.path.join(dirpath, f"comb_{k:02d}.f32"), "rawf32")


def load_trace(dirpath: str | os.PathLike) -> StepTrace:
    """Read a trace directory written by :func:`save_trace`."""
    with open(os.path.join(dirpath, "manifest.json"), "r", encoding="ascii") as fh:
        manifest = json.load(fh)
    cfg = TraceConfig(
        steps=manifest["steps"],
        schedule=tuple(manifest["schedule"]),
        guidance=manifest["guidance"],
        gap_alpha=manifest["gap_alpha"],
        gap_gamma=manifest["gap_gamma"],
        seed=manifest["seed"],
        cost_weights=tuple(manifest["cost_weights"]),
    )
    target = load_image(os.path.join(dirpath, "target.f32"))
    records = []
    for k in range(1, cfg.steps + 1):
        records.append(
            StepRecord(
                cond=load_image(os.path.join(dirpath, f"cond_{k:02d}.f32")),
                uncond=load_image(os.path.join(dirpath, f"uncond_{k:02d}.f32")),
                combined=load_image(os.path.join(dirpath, f"comb_{k:02d}.f32")),
                weight=cfg.cost_weights[k - 1],
            )
        )
    return StepTrace(config=cfg, target=target, records=tuple(records))
