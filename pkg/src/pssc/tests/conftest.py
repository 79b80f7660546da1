import numpy as np
import pytest

from pssc.config import RunConfig, SynthConfig, TrainConfig
from pssc.datasets import synthesize_subspaces
from pssc.linalg import SeededRng


def pytest_configure(config):
    config.addinivalue_line(
            'markers', 'slow: end-to-end runs that train full-size networks')


@pytest.fixture
def rng():
    return SeededRng(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_train_cfg():
    """A tiny network and short schedule for fast pipeline tests."""
    return TrainConfig(hidden_widths=[16], latent_dim=8, epochs_pretrain=30,
                       epochs_finetune=20, lr_pretrain=1e-2, lr_finetune=1e-3,
                       early_stop_tol=0.0)


@pytest.fixture
def small_dataset():
    return synthesize_subspaces(SynthConfig(k=2, q=2, d=8, per_cluster=12,
                                            noise=0.01, seed=3))


@pytest.fixture
def small_run_cfg():
    return RunConfig(k=2, q=2, synth_k=2, synth_q=2, synth_d=8,
                     synth_per_cluster=12, hidden_widths=[16], latent_dim=8,
                     epochs_pretrain=30, epochs_finetune=20, lr_pretrain=1e-2,
                     lr_finetune=1e-3, early_stop_tol=0.0, kmeans_restarts=3)


def random_symmetric_nonneg(np_rng, n, zero_diag=True):
    S = np_rng.uniform(0.0, 1.0, size=(n, n))
    S = 0.5 * (S + S.T)
    if zero_diag:
        np.fill_diagonal(S, 0.0)
    return S
