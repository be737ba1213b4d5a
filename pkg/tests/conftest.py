import numpy as np
import pytest

from harood.data import SyntheticShiftSpec, make_synthetic_suite
from harood.data.cache import write_subject_cache
from harood.data.registry import DATASETS
from harood.data.types import RawRecording
from harood.algorithms import DomainBatch
from harood.models import BackboneConfig
from harood.scenarios import bundle_from_domains

# recordings long enough that cross-time quartiles get >= 1 window each
_MOCK_ROWS = {
    "dsads": 125,
    "usc_had": 500,
    "uci_har": 128,
    "pamap2": 900,
    "emg": 900,
    "wesad": 900,
}


def build_mock_cache(cache_dir, datasets=None, seed=0):
    """Write per-subject cache files shaped like the six real corpora."""
    rng = np.random.default_rng(seed)
    for name in datasets or DATASETS:
        info = DATASETS[name]
        rows = _MOCK_ROWS[name]
        for subject in range(info.subjects):
            recordings = [
                RawRecording(
                    stream=rng.normal(size=(rows, info.channels)),
                    subject_id=subject,
                    activity_label=cls,
                    metadata={"dataset": name},
                )
                for cls in range(info.classes)
            ]
            write_subject_cache(cache_dir, name, subject, recordings,
                                info.sampling_rate_hz)
    return cache_dir


@pytest.fixture(scope="session")
def mock_cache(tmp_path_factory):
    cache_dir = tmp_path_factory.mktemp("mock_cache")
    return build_mock_cache(cache_dir)


@pytest.fixture(scope="session")
def synthetic_bundle():
    spec = SyntheticShiftSpec(domain_count=3, class_count=4, channels=3, length=32,
                              amplitude_shift=(0.0, 0.2, -0.2), noise_std=0.1,
                              samples_per_class_per_domain=10, seed=11)
    return bundle_from_domains(make_synthetic_suite(spec), spec.class_count)


TOY_SHAPE = (2, 1, 8)
TOY_CLASSES = 3


def toy_backbone(**overrides) -> BackboneConfig:
    kw = dict(family="cnn", input_shape=TOY_SHAPE, capacity="small",
              cnn_widths=(3, 4))
    kw.update(overrides)
    return BackboneConfig(**kw)


def toy_batches(seed=0, n=4, classes=TOY_CLASSES, domains=2):
    rng = np.random.default_rng(seed)
    return [
        DomainBatch(inputs=rng.normal(size=(n, *TOY_SHAPE)),
                    labels=rng.integers(0, classes, n), domain_id=d)
        for d in range(domains)
    ]
