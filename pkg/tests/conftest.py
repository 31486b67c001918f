"""Shared fixtures: a small cached climatology and random-instance helpers."""

import numpy as np
import pytest

from enshrink.climatology import generate_climatology
from enshrink.models import ModelConfig


@pytest.fixture(scope="session")
def model12():
    return ModelConfig(dimension=12, forcing=8.0, step=0.05)


@pytest.fixture(scope="session")
def target12(model12):
    # one shared climatology keeps the filter tests fast
    return generate_climatology(
        model12, snapshots=400, spinup_steps=100, rng=np.random.default_rng(99)
    )


def tiny_config_dict(**overrides):
    """Minimal fast experiment config; overrides patch top-level keys."""
    raw = {
        "schema_version": 1,
        "model": {"dimension": 12, "forcing": 8.0, "step": 0.05},
        "assimilation": {"steps": 25, "spinup": 10, "dt": 0.05},
        "observations": {
            "operator": "identity",
            "noise": {"type": "scalar", "value": 1.0},
        },
        "ensemble_size": 5,
        "filter": {"variant": "etkf", "inflation": 1.05},
        "climatology": {"source": "generate", "snapshots": 200, "spinup_steps": 40},
        "replicates": 2,
        "base_seed": 314,
    }
    raw.update(overrides)
    return raw


def random_spd(rng, m, scale=1.0):
    """Random symmetric positive definite (m, m) matrix."""
    b = rng.standard_normal((m, m))
    return scale * (b @ b.T + m * np.eye(m))


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
