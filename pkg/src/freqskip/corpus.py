"""Frozen procedural corpora spanning the frequency-sensitivity spectrum.

The default mixed corpus draws three recipe groups: smooth scenes (Gaussian
blobs plus at most a coarse, faint texture), multi-octave textured scenes
whose spectral slope spans the skip boundaries, and fine-texture scenes that
only the late generation steps can carry.  Octave textures are roughly
scale-self-similar, which keeps the decision-step spectral features aligned
with the final full-resolution output.

Group shares and parameter ranges were tuned once against the acceptance
checks and then frozen; regenerating with the same seed is bit-stable.  Two
further families with disjoint recipe styles (blob geometry, texture bands,
sinusoidal accents) support the transfer check: train on one, evaluate on
the other.
"""

from __future__ import annotations

import numpy as np

from .generator import TargetSpec

_CORPUS_STREAM = 2


def default_ids(n: int) -> list[str]:
    return [f"s{i:04d}" for i in range(n)]


def default_corpus(n: int = 200, seed: int = 0) -> list[TargetSpec]:
    """The frozen mixed corpus used by the standard experiments."""
    rng = np.random.default_rng((seed, _CORPUS_STREAM, 0))
    specs = []
    for _ in range(n):
        u = rng.random()
        sample_seed = int(rng.integers(0, 2**31))
        if u < 0.25:
            # smooth: blobs, at most a faint coarse texture
            spec = TargetSpec(
                seed=sample_seed,
                blobs=int(rng.integers(2, 6)),
                blob_sigma=float(rng.uniform(25.0, 50.0)),
                blob_amp=float(rng.uniform(0.18, 0.30)),
                noise_amp=float(rng.uniform(0.0, 0.10)),
                noise_scale=0.6,
                noise_octaves=5,
                noise_persistence=float(rng.uniform(2.2, 3.2)),
            )
        elif u < 0.80:
            # textured: spectral slope sweeps across the skip boundaries
            spec = TargetSpec(
                seed=sample_seed,
                blobs=int(rng.integers(2, 5)),
                blob_sigma=float(rng.uniform(25.0, 45.0)),
                blob_amp=float(rng.uniform(0.18, 0.28)),
                noise_amp=float(rng.uniform(0.05, 0.30)),
                noise_scale=0.6,
                noise_octaves=5,
                noise_persistence=float(np.exp(rng.uniform(np.log(0.55), np.log(2.4)))),
            )
        else:
            # fine texture: the late steps carry it
            spec = TargetSpec(
                seed=sample_seed,
                blobs=int(rng.integers(1, 4)),
                blob_sigma=float(rng.uniform(25.0, 40.0)),
                blob_amp=float(rng.uniform(0.15, 0.25)),
                noise_amp=float(rng.uniform(0.10, 0.33)),
                noise_scale=0.6,
                noise_octaves=5,
                noise_persistence=float(rng.uniform(0.45, 0.72)),
            )
        specs.append(spec)
    return specs


def blob_corpus(n: int = 40, seed: int = 0) -> list[TargetSpec]:
    """Smooth blob-only targets; every sample is frequency-robust."""
    rng = np.random.default_rng((seed, _CORPUS_STREAM, 1))
    return [
        TargetSpec(
            seed=int(rng.integers(0, 2**31)),
            blobs=int(rng.integers(2, 7)),
            blob_sigma=float(rng.uniform(22.0, 55.0)),
            blob_amp=float(rng.uniform(0.15, 0.32)),
        )
        for _ in range(n)
    ]


def family_a(n: int = 120, seed: int = 0) -> list[TargetSpec]:
    """Training family: round blobs and octave textures at base scale 0.6."""
    rng = np.random.default_rng((seed, _CORPUS_STREAM, 10))
    specs = []
    for _ in range(n):
        specs.append(
            TargetSpec(
                seed=int(rng.integers(0, 2**31)),
                blobs=int(rng.integers(2, 5)),
                blob_sigma=float(rng.uniform(28.0, 45.0)),
                blob_amp=float(rng.uniform(0.18, 0.28)),
                noise_amp=float(rng.uniform(0.04, 0.30)),
                noise_scale=0.6,
                noise_octaves=5,
                noise_persistence=float(np.exp(rng.uniform(np.log(0.5), np.log(2.8)))),
            )
        )
    return specs


def family_b(n: int = 120, seed: int = 0) -> list[TargetSpec]:
    """Held-out family: more and smaller blobs, a shifted texture band, and
    diagonal sinusoidal accents on a third of the samples."""
    rng = np.random.default_rng((seed, _CORPUS_STREAM, 11))
    specs = []
    for _ in range(n):
        with_sine = rng.random() < 0.35
        specs.append(
            TargetSpec(
                seed=int(rng.integers(0, 2**31)),
                blobs=int(rng.integers(3, 7)),
                blob_sigma=float(rng.uniform(18.0, 30.0)),
                blob_amp=float(rng.uniform(0.15, 0.26)),
                sine_cycles=float(rng.uniform(25.0, 50.0)) if with_sine else 0.0,
                sine_amp=float(rng.uniform(0.04, 0.10)) if with_sine else 0.0,
                sine_angle=float(rng.choice([np.pi / 4.0, 3.0 * np.pi / 4.0])),
                noise_amp=float(rng.uniform(0.05, 0.32)),
                noise_scale=0.5,
                noise_octaves=5,
                noise_persistence=float(np.exp(rng.uniform(np.log(0.55), np.log(2.5)))),
            )
        )
    return specs
