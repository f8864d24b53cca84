import numpy as np
import pytest

from alas import synthgen


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {name}: {outcome}", flush=True)


@pytest.fixture
def small_synth(tmp_path):
    """A tiny clean dataset: 3 samples, 2 layers, mild noise at the top."""
    cfg = synthgen.SynthConfig(
        num_samples=3,
        num_layers=2,
        hidden_dim=16,
        words_per_sample=(4, 6),
        frames_per_word=(2, 4),
        noise_per_layer=(0.0, 0.0, 0.1),
        seed=11,
    )
    return synthgen.generate(cfg, tmp_path / "data")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
