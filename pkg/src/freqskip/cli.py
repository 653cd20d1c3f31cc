"""Command-line workflow: corpus -> label -> train -> run -> evaluate.

Every command takes a flat JSON config file (``--config``) with optional
flag overrides, validates it before doing any work, and writes its artifacts
under a user-supplied output directory together with a ``manifest.json``
recording the config hash.  Identical config and flags produce byte-identical
artifacts.

Exit codes: 0 success, 2 usage or config error, 3 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import multiprocessing
import os
import sys
from dataclasses import dataclass
from functools import partial

import numpy as np

from .corpus import blob_corpus, default_corpus, default_ids, family_a, family_b
from .decision import FeatureVector, ModelFormatError, TrainedModel, load_model, predict, save_model, split_train_val
from .frequency import HFParams, hf_ratio
from .generator import TargetSpec, TraceConfig, synth_target
from .image import ImageFormatError, load_image, resize_area, resize_bilinear, save_image, to_grayscale
from .labeling import LabeledSample, label_sample, write_features_csv, write_labels_csv, read_feature_csv
from .metrics import HfMaskParams, SsimParams, ssim
from .pipeline import EvalResult, PipelineConfig, RunReport, run_accelerated, train_from_samples
from .strategies import Strategy, apply_strategy, parse_strategy


class ConfigError(ValueError):
    """Raised for invalid or inconsistent run configuration."""


_CORPUS_KINDS = ("default", "blob", "family_a", "family_b")


@dataclass
class RunConfig:
    """Flat, file-loadable configuration for the whole workflow.

    The defaults are the frozen experiment setup; every key can be set in the
    JSON config file and a few common ones also by command-line flags.
    """

    seed: int = 0
    corpus_size: int = 200
    corpus_kind: str = "default"
    steps: int = 12
    schedule: tuple[int, ...] = (8, 16, 24, 32, 48, 64, 96, 128, 160, 192, 224, 256)
    guidance: float = 2.0
    gap_alpha: float = 0.15
    gap_gamma: float = 0.6
    decision_step: int = 9
    analysis_size: int = 128
    eligible_steps: int = 3
    overhead: float = 0.005
    hf_rho: float = 0.4
    hf_epsilon: float = 1e-8
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    hf_mask_quantile: float = 0.75
    ladder: tuple[str, ...] = (
        "skip_3",
        "skip_2",
        "skip_1",
        "uncond_3",
        "uncond_2",
        "uncond_1",
        "none",
    )
    tau: float = 0.84
    tau_sensitivity: float = 0.85
    model_kind: str = "logreg"
    train_ratio: float = 0.8
    split_seed: int = 0

    @staticmethod
    def from_file(path: str | None) -> "RunConfig":
        cfg = RunConfig()
        if path is None:
            return cfg
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg

    def apply_overrides(self, args: argparse.Namespace) -> None:
        for name in ("seed", "corpus_size", "corpus_kind", "tau", "model_kind"):
            value = getattr(args, name, None)
            if value is not None:
                setattr(self, name, value)

    def validate(self) -> None:
        try:
            self.trace_config()
            self.pipeline_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        if self.corpus_kind not in _CORPUS_KINDS:
            raise ConfigError(f"corpus_kind must be one of {_CORPUS_KINDS}, got {self.corpus_kind!r}")
        if self.corpus_size < 1:
            raise ConfigError(f"corpus_size must be >= 1, got {self.corpus_size}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if not 0.0 <= self.tau_sensitivity <= 1.0:
            raise ConfigError(f"tau_sensitivity must be in [0, 1], got {self.tau_sensitivity}")
        if self.model_kind not in ("logreg", "tree", "forest", "two_stage"):
            raise ConfigError(f"unknown model_kind {self.model_kind!r}")
        if not 0.0 < self.train_ratio < 1.0:
            raise ConfigError(f"train_ratio must be in (0, 1), got {self.train_ratio}")

    def trace_config(self) -> TraceConfig:
        return TraceConfig(
            steps=self.steps,
            schedule=tuple(self.schedule),
            guidance=self.guidance,
            gap_alpha=self.gap_alpha,
            gap_gamma=self.gap_gamma,
            seed=self.seed,
        )

    def pipeline_config(self) -> PipelineConfig:
        pcfg = PipelineConfig(
            decision_step=self.decision_step,
            analysis_size=self.analysis_size,
            hf=HFParams(rho=self.hf_rho, epsilon=self.hf_epsilon),
            ssim=SsimParams(
                window=self.ssim_window,
                sigma=self.ssim_sigma,
                k1=self.ssim_k1,
                k2=self.ssim_k2,
            ),
            hf_mask=HfMaskParams(quantile=self.hf_mask_quantile),
            ladder=tuple(parse_strategy(ident) for ident in self.ladder),
            eligible_steps=self.eligible_steps,
            overhead=self.overhead,
        )
        pcfg.validate_for(self.trace_config())
        return pcfg

    def corpus_specs(self) -> list[TargetSpec]:
        maker = {
            "default": default_corpus,
            "blob": blob_corpus,
            "family_a": family_a,
            "family_b": family_b,
        }[self.corpus_kind]
        return maker(self.corpus_size, self.seed)

    def canonical_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: str, cfg: RunConfig, command: str, extra: dict | None = None) -> None:
    body = {"command": command, "config_hash": cfg.config_hash(), "config": json.loads(cfg.canonical_json())}
    if extra:
        body.update(extra)
    _write_json(body, os.path.join(out_dir, "manifest.json"))


def _map_jobs(fn, items: list, jobs: int) -> list:
    if jobs <= 1:
        return [fn(item) for item in items]
    with multiprocessing.Pool(jobs) as pool:
        return pool.map(fn, items)


# --------------------------------------------------------------------------
# corpus
# --------------------------------------------------------------------------

def _synth_worker(spec: TargetSpec, size: int) -> np.ndarray:
    return synth_target(spec, size)


def cmd_corpus(cfg: RunConfig, out_dir: str, jobs: int) -> int:
    tcfg = cfg.trace_config()
    pcfg = cfg.pipeline_config()
    specs = cfg.corpus_specs()
    ids = default_ids(len(specs))
    os.makedirs(out_dir, exist_ok=True)
    targets = _map_jobs(partial(_synth_worker, size=tcfg.full_size), specs, jobs)
    buckets = {"0.0-0.1": 0, "0.1-0.4": 0, "0.4-1.0": 0}
    for sid, target in zip(ids, targets):
        save_image(target, os.path.join(out_dir, f"{sid}.f32"), "rawf32")
        ratio = hf_ratio(target, pcfg.hf)
        if ratio <= 0.1:
            buckets["0.0-0.1"] += 1
        elif ratio < 0.4:
            buckets["0.1-0.4"] += 1
        else:
            buckets["0.4-1.0"] += 1
    _write_manifest(
        out_dir,
        cfg,
        "corpus",
        {
            "ids": ids,
            "hf_ratio_histogram": buckets,
            "specs": [dataclasses.asdict(s) for s in specs],
        },
    )
    print(f"corpus: wrote {len(ids)} targets to {out_dir} (hf_ratio buckets {buckets})")
    return 0


def _read_corpus(corpus_dir: str) -> tuple[list[str], list[np.ndarray]]:
    manifest_path = os.path.join(corpus_dir, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="ascii") as fh:
            manifest = json.load(fh)
        ids = list(manifest["ids"])
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        raise ImageFormatError(f"{corpus_dir}: not a corpus directory ({exc})") from None
    targets = [load_image(os.path.join(corpus_dir, f"{sid}.f32")) for sid in ids]
    return ids, targets


# --------------------------------------------------------------------------
# label
# --------------------------------------------------------------------------

def _label_worker(item: tuple[str, np.ndarray], tcfg: TraceConfig, pcfg: PipelineConfig, tau: float) -> LabeledSample:
    sid, target = item
    return label_sample(target, tcfg, pcfg, tau, sample_id=sid)


def cmd_label(cfg: RunConfig, corpus_dir: str, out_dir: str, jobs: int) -> int:
    tcfg = cfg.trace_config()
    pcfg = cfg.pipeline_config()
    ids, targets = _read_corpus(corpus_dir)
    os.makedirs(out_dir, exist_ok=True)
    samples = _map_jobs(
        partial(_label_worker, tcfg=tcfg, pcfg=pcfg, tau=cfg.tau), list(zip(ids, targets)), jobs
    )
    write_features_csv(samples, os.path.join(out_dir, "features.csv"))
    write_labels_csv(samples, os.path.join(out_dir, "labels.csv"))
    histogram: dict[str, int] = {}
    for s in samples:
        histogram[s.label] = histogram.get(s.label, 0) + 1
    _write_manifest(out_dir, cfg, "label", {"tau": cfg.tau, "label_histogram": dict(sorted(histogram.items()))})
    print(f"label: {len(samples)} samples, histogram {dict(sorted(histogram.items()))}")
    return 0


# --------------------------------------------------------------------------
# train
# --------------------------------------------------------------------------

def cmd_train(cfg: RunConfig, features_path: str, labels_path: str, kind: str | None, out_dir: str) -> int:
    kind = kind or cfg.model_kind
    if kind not in ("logreg", "tree", "forest", "two_stage"):
        raise ConfigError(f"unknown model kind {kind!r}")
    feat_ids, x, _ = read_feature_csv(features_path)
    label_ids, _, labels = read_feature_csv(labels_path)
    if labels is None:
        raise ValueError(f"{labels_path}: missing label column")
    if feat_ids != label_ids:
        raise ValueError("feature and label CSVs disagree on sample ids")
    samples = [
        LabeledSample(sid, FeatureVector(*row), lab, ssims={})
        for sid, row, lab in zip(feat_ids, x, labels)
    ]
    train_idx, val_idx = split_train_val(len(samples), cfg.train_ratio, cfg.split_seed)
    classes = tuple(cfg.ladder)
    model = train_from_samples([samples[i] for i in train_idx], classes, kind)
    train_acc = float(
        np.mean([predict(model, samples[i].features) == samples[i].label for i in train_idx])
    )
    val_acc = float(np.mean([predict(model, samples[i].features) == samples[i].label for i in val_idx]))
    os.makedirs(out_dir, exist_ok=True)
    save_model(model, os.path.join(out_dir, "model.json"))
    _write_manifest(
        out_dir,
        cfg,
        "train",
        {"kind": kind, "train_accuracy": train_acc, "val_accuracy": val_acc, "train_size": len(train_idx), "val_size": len(val_idx)},
    )
    print(f"train: kind={kind} train_accuracy={train_acc:.4f} val_accuracy={val_acc:.4f}")
    return 0


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def _load_target(path: str, size: int) -> np.ndarray:
    img = load_image(path)
    if img.ndim == 3:
        img = to_grayscale(img)
    if img.shape != (size, size):
        if img.shape[0] >= size and img.shape[1] >= size:
            img = resize_area(img, size, size)
        else:
            img = resize_bilinear(img, size, size)
    return img


def cmd_run(cfg: RunConfig, model_path: str, target_path: str, out_dir: str, force: str | None) -> int:
    tcfg = cfg.trace_config()
    pcfg = cfg.pipeline_config()
    target = _load_target(target_path, tcfg.full_size)
    model = None if force is not None else load_model(model_path)
    force_strategy = parse_strategy(force) if force is not None else None
    out, report = run_accelerated(target, tcfg, pcfg, model, force_strategy=force_strategy)
    os.makedirs(out_dir, exist_ok=True)
    save_image(out, os.path.join(out_dir, "output.f32"), "rawf32")
    save_image(out, os.path.join(out_dir, "output.pgm"), "pgm8")
    _write_manifest(
        out_dir,
        cfg,
        "run",
        {
            "strategy": report.strategy,
            "hf_diff": report.features.hf_diff,
            "hf_ratio": report.features.hf_ratio,
            "cost": report.cost,
            "speedup": report.speedup,
        },
    )
    print(f"run: strategy={report.strategy} cost={report.cost:.4f} speedup={report.speedup:.3f}")
    return 0


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------

def _eval_worker(item: tuple[str, np.ndarray], tcfg: TraceConfig, pcfg: PipelineConfig, model: TrainedModel) -> RunReport:
    _, target = item
    _, report = run_accelerated(target, tcfg, pcfg, model, compute_baseline=True)
    return report


def cmd_evaluate(
    cfg: RunConfig, model_path: str, corpus_dir: str, out_dir: str, split_sensitivity: bool, jobs: int
) -> int:
    tcfg = cfg.trace_config()
    pcfg = cfg.pipeline_config()
    model = load_model(model_path)
    ids, targets = _read_corpus(corpus_dir)
    os.makedirs(out_dir, exist_ok=True)
    reports = _map_jobs(
        partial(_eval_worker, tcfg=tcfg, pcfg=pcfg, model=model), list(zip(ids, targets)), jobs
    )
    result = EvalResult(ids=ids, reports=reports)
    result.write_csv(os.path.join(out_dir, "evaluation.csv"))
    _write_json(result.summary(), os.path.join(out_dir, "summary.json"))
    extra: dict = {"summary": result.summary()}
    if split_sensitivity:
        sensitive, robust = [], []
        for sid, target in zip(ids, targets):
            baseline, _ = apply_strategy(target, tcfg, Strategy.none())
            probed, _ = apply_strategy(target, tcfg, Strategy.skip(3))
            bucket = sensitive if ssim(baseline, probed, pcfg.ssim) < cfg.tau_sensitivity else robust
            bucket.append(sid)
        for name, bucket in (("sensitive", sensitive), ("robust", robust)):
            with open(os.path.join(out_dir, f"{name}.txt"), "w", encoding="ascii", newline="\n") as fh:
                fh.writelines(f"{sid}\n" for sid in bucket)
        extra["sensitive"] = len(sensitive)
        extra["robust"] = len(robust)
    _write_manifest(out_dir, cfg, "evaluate", extra)
    print(
        f"evaluate: {len(ids)} samples mean_ssim={result.mean_ssim:.4f} "
        f"mean_speedup={result.mean_speedup:.3f} histogram={result.histogram}"
    )
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON config file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override config seed")
    common.add_argument("--tau", type=float, help="override labeling SSIM threshold")
    common.add_argument("--corpus-size", dest="corpus_size", type=int, help="override corpus size")
    common.add_argument("--corpus-kind", dest="corpus_kind", choices=_CORPUS_KINDS, help="recipe family")
    common.add_argument("--model-kind", dest="model_kind", choices=("logreg", "tree", "forest", "two_stage"))
    common.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1, bit-stable)")

    parser = argparse.ArgumentParser(
        prog="freqskip",
        description="Sample-adaptive frequency-aware acceleration workflow",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", parents=[common], help="materialize the frozen procedural corpus")
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("label", parents=[common], help="simulate strategies and emit feature/label CSVs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("train", parents=[common], help="fit a decision model from labeled features")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--kind", choices=("logreg", "tree", "forest", "two_stage"))
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("run", parents=[common], help="accelerated generation for a single target image")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--force-strategy", dest="force_strategy")

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a model over a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--split-sensitivity", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        cfg.apply_overrides(args)
        cfg.validate()
        if args.command == "corpus":
            return cmd_corpus(cfg, args.out, args.jobs)
        if args.command == "label":
            return cmd_label(cfg, args.corpus, args.out, args.jobs)
        if args.command == "train":
            return cmd_train(cfg, args.features, args.labels, args.kind, args.out)
        if args.command == "run":
            return cmd_run(cfg, args.model, args.target, args.out, args.force_strategy)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.model, args.corpus, args.out, args.split_sensitivity, args.jobs)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ImageFormatError, ModelFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
