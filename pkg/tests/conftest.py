"""Shared fixtures: canonical parameter sets and a direct matrix oracle.

The oracle helpers here deliberately avoid the closed-form statistics
module: they propagate the full covariance matrix pulse by pulse and
read entries off the matrix, so tests compare two genuinely different
computations.
"""

import numpy as np
import pytest

from qndcert import (
    AtomicBlock,
    ExperimentParams,
    GaussianState,
    Layout,
    NoiseModel,
    OpticalBlock,
    apply_pulse,
    get_entry,
    make_initial_state,
)


@pytest.fixture
def layout3():
    return Layout(3)


def _coherent_initial(layout):
    return make_initial_state(AtomicBlock.coherent(100.0),
                              OpticalBlock.coherent(100.0, layout.n_pulses),
                              layout)


@pytest.fixture
def ideal_set(layout3):
    """Lossless, noiseless, kappa = 1; every figure has a round value."""
    params = ExperimentParams.from_kappa(1.0, mean_sx=50.0, mean_jx=50.0)
    return params, NoiseModel.zero(), _coherent_initial(layout3)


@pytest.fixture
def lossy_set(layout3):
    """r_a = 0.8, r_l = 0.9, no added noise."""
    params = ExperimentParams.from_kappa(1.0, mean_sx=50.0, mean_jx=50.0,
                                         r_a=0.8, r_l=0.9)
    return params, NoiseModel.zero(), _coherent_initial(layout3)


@pytest.fixture
def noisy_set(layout3):
    """Lossy plus an injected noise matrix with off-diagonal coupling."""
    params = ExperimentParams.from_kappa(1.0, mean_sx=50.0, mean_jx=50.0,
                                         r_a=0.8, r_l=0.9)
    noise = NoiseModel.from_entries({(3, 3): 2.0, (3, 5): 0.5, (5, 5): 4.0})
    return params, noise, _coherent_initial(layout3)


def propagate(params, noise, initial, coupling_sign=1.0) -> GaussianState:
    state = initial
    for pulse in range(1, initial.layout.n_pulses + 1):
        state = apply_pulse(state, params, noise, pulse,
                            coupling_sign=coupling_sign)
    return state


def meter_moments(final: GaussianState) -> dict[str, float]:
    """Meter variances and covariances straight from the matrix."""
    labels = final.layout.meter_labels
    names = "pqr"
    out = {}
    for k, row in enumerate(labels):
        out[f"var_{names[k]}"] = get_entry(final, row, row)
        for j in range(k):
            out[f"cov_{names[j]}{names[k]}"] = get_entry(final, labels[j], row)
    return out


def schur_conditional(cov: np.ndarray, index: int) -> np.ndarray:
    """Textbook conditional covariance, as an independent oracle."""
    keep = [k for k in range(cov.shape[0]) if k != index]
    sigma_aa = cov[np.ix_(keep, keep)]
    sigma_ab = cov[keep, index]
    out = sigma_aa - np.outer(sigma_ab, sigma_ab) / cov[index, index]
    full = np.zeros_like(cov)
    full[np.ix_(keep, keep)] = out
    return full


def random_psd(rng, size, scale=1.0):
    root = rng.normal(size=(size, size + 2))
    matrix = root @ root.T
    return matrix * (scale / matrix.diagonal().max())
