#!/usr/bin/env python3
"""End-to-end workflow on the frozen corpus via the CLI.

Materializes the corpus, labels it, trains a model, runs one sample, and
evaluates the whole corpus.  Everything lands under the output directory;
re-running with the same arguments reproduces every file byte for byte.

Usage: python scripts/run_workflow.py OUT_DIR [--corpus-size N] [--tau T]
"""

import argparse
import sys
from pathlib import Path

from freqskip.cli import main as cli


def run(args):
    out = Path(args.out_dir)
    common = ["--corpus-size", str(args.corpus_size), "--tau", str(args.tau), "--seed", str(args.seed)]
    corpus = out / "corpus"
    labels = out / "labels"
    model = out / "model"
    steps = [
        ["corpus", *common, "-o", str(corpus)],
        ["label", *common, "--corpus", str(corpus), "-o", str(labels)],
        [
            "train",
            *common,
            "--features",
            str(labels / "features.csv"),
            "--labels",
            str(labels / "labels.csv"),
            "-o",
            str(model),
        ],
        [
            "run",
            *common,
            "--model",
            str(model / "model.json"),
            "--target",
            str(corpus / "s0000.f32"),
            "-o",
            str(out / "single_run"),
        ],
        [
            "evaluate",
            *common,
            "--model",
            str(model / "model.json"),
            "--corpus",
            str(corpus),
            "-o",
            str(out / "evaluation"),
            "--split-sensitivity",
        ],
    ]
    for step in steps:
        print(f"$ freqskip {' '.join(step)}")
        code = cli(step)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--corpus-size", type=int, default=200)
    parser.add_argument("--tau", type=float, default=0.84)
    parser.add_argument("--seed", type=int, default=0)
    sys.exit(run(parser.parse_args()))
