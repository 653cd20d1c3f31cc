import numpy as np
import pytest

from freqskip.corpus import default_corpus
from freqskip.frequency import HFParams
from freqskip.generator import TraceConfig, synth_target
from freqskip.labeling import label_sample
from freqskip.pipeline import PipelineConfig

# The frozen experiment setup: trace seed 0, analysis at 128, mask radius 0.4.
FROZEN_TRACE = TraceConfig(seed=0)
FROZEN_PIPELINE = PipelineConfig(hf=HFParams(rho=0.4))
FROZEN_TAUS = (0.88, 0.86, 0.84)


@pytest.fixture(scope="session")
def frozen_corpus():
    return default_corpus(200, seed=0)


@pytest.fixture(scope="session")
def frozen_targets(frozen_corpus):
    size = FROZEN_TRACE.full_size
    return [synth_target(spec, size) for spec in frozen_corpus]


@pytest.fixture(scope="session")
def frozen_records(frozen_targets):
    """Per-sample features and per-strategy SSIM records for the 200-sample
    frozen corpus; labels for any tau derive from these."""
    return [
        label_sample(target, FROZEN_TRACE, FROZEN_PIPELINE, 0.84, sample_id=f"s{i:04d}")
        for i, target in enumerate(frozen_targets)
    ]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
