"""Shot-level Monte Carlo of the pulsed measurement.

Each shot draws the initial phase-space vector from the input Gaussian
state, then applies the per-pulse linear map and adds a fresh noise draw
per pulse; the recorded outcomes are the meter components (P_y, Q_y,
R_y).  The no-atoms reference arm runs the identical discipline with the
coupling off, r_A = r_L = 1 and no added noise, so it samples the raw
input light.

Generation is chunked with a fixed chunk size, and every chunk gets its
own random substream keyed by (arm, chunk index) off one master seed.
Chunks are therefore independent and reproducible in isolation, results
are bit-identical however the work is scheduled, and the two arms never
share randomness.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .core import GaussianState
from .dynamics import ExperimentParams, NoiseModel, interaction_matrix
from .errors import SamplerUnsupportedError
from .statistics import (
    MomentSet,
    ShotRecords,
    no_atoms_moments,
    predicted_moments,
    sample_moments,
)

__all__ = [
    "CHUNK_SHOTS",
    "simulate_arm",
    "simulate_shots",
    "params_hash",
    "CheckRow",
    "EmpiricalCheck",
    "empirical_check",
]

# Fixed so chunked generation is reproducible regardless of total shot
# count or scheduling.
CHUNK_SHOTS = 16384

_ARM_IDS = {True: 0, False: 1}


def _psd_factor(matrix: np.ndarray, what: str) -> np.ndarray:
    """Factor A with A @ A.T == matrix, dropping null directions.

    Eigenvalues below -1e-9 (scaled by the trace for large matrices)
    are rejected; small negatives above that are rounding and clip to 0.
    """
    eigvals, eigvecs = np.linalg.eigh(matrix)
    floor = -1e-9 * max(1.0, float(np.trace(matrix)))
    if eigvals[0] < floor:
        raise SamplerUnsupportedError(
            f"{what} has eigenvalue {eigvals[0]:.6g} below {floor:.6g}; "
            "cannot be sampled"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    keep = eigvals > 0.0
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


def _reference_variant(params: ExperimentParams) -> ExperimentParams:
    # Coupling off, lossless: the pulse maps collapse to the identity.
    return replace(params, g_tau=0.0, r_a=1.0, r_l=1.0)


def simulate_arm(params: ExperimentParams, noise: NoiseModel,
                 initial: GaussianState, n_shots: int, seed: int,
                 with_atoms: bool = True) -> np.ndarray:
    """Meter outcomes of one arm, shape (n_shots, n_pulses).

    ``with_atoms=False`` runs the no-atoms reference variant (coupling
    off, r_A = r_L = 1, zero noise) on its own substream family.
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be positive, got {n_shots}")
    layout = initial.layout
    if not with_atoms:
        params = _reference_variant(params)
        noise = NoiseModel.zero()

    maps = [interaction_matrix(params, pulse, layout)
            for pulse in range(1, layout.n_pulses + 1)]
    initial_factor = _psd_factor(initial.cov, "initial covariance")
    noise_factor = None
    if not noise.is_zero:
        noise_factor = _psd_factor(noise.matrix, "noise matrix")
    # Row scatter of the 6x6 noise onto (spin block, active pulse block).
    noise_rows = [np.r_[0:3, sl.start:sl.stop]
                  for sl in (layout.block_slice(p)
                             for p in range(1, layout.n_pulses + 1))]

    arm = _ARM_IDS[bool(with_atoms)]
    meters = list(layout.meter_indices)
    out = np.empty((n_shots, layout.n_pulses))
    for chunk, start in enumerate(range(0, n_shots, CHUNK_SHOTS)):
        count = min(CHUNK_SHOTS, n_shots - start)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(arm, chunk))
        )
        draws = rng.standard_normal((count, initial_factor.shape[1]))
        x = initial.mean + draws @ initial_factor.T
        for pulse_index, m in enumerate(maps):
            x = x @ m.T
            if noise_factor is not None:
                kick = rng.standard_normal((count, noise_factor.shape[1]))
                x[:, noise_rows[pulse_index]] += kick @ noise_factor.T
        out[start:start + count] = x[:, meters]
    return out


def params_hash(params: ExperimentParams, noise: NoiseModel,
                initial: GaussianState) -> str:
    """Short stable digest of the model a record set was drawn from."""
    h = hashlib.sha256()
    fields = np.array([
        initial.layout.n_pulses, params.g_tau, params.mean_sx,
        params.mean_jx, params.r_a, params.r_l,
    ])
    for part in (fields, noise.matrix, initial.mean, initial.cov):
        h.update(np.ascontiguousarray(part, dtype=float).tobytes())
    return h.hexdigest()[:16]


def simulate_shots(params: ExperimentParams, noise: NoiseModel,
                   initial: GaussianState, n_shots: int,
                   seed: int) -> ShotRecords:
    """Both arms off one master seed, bundled with their metadata."""
    return ShotRecords(
        with_atoms=simulate_arm(params, noise, initial, n_shots, seed,
                                with_atoms=True),
        no_atoms=simulate_arm(params, noise, initial, n_shots, seed,
                              with_atoms=False),
        seed=seed,
        params_hash=params_hash(params, noise, initial),
    )


@dataclass(frozen=True)
class CheckRow:
    arm: str
    moment: str
    predicted: float
    sampled: float
    se: float
    z: float


@dataclass(frozen=True)
class EmpiricalCheck:
    """Sampled-vs-predicted comparison for every meter moment of both
    arms; ``passed`` means every |z| stayed within ``z_max``."""

    rows: tuple[CheckRow, ...]
    z_max: float

    @property
    def max_abs_z(self) -> float:
        return max(abs(row.z) for row in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.z_max


def _compare(arm: str, sampled: MomentSet, predicted: MomentSet) -> list[CheckRow]:
    rows = []
    for name, expected in predicted.entries().items():
        got = getattr(sampled, name)
        se = sampled.se[name]
        if se > 0.0:
            z = (got - expected) / se
        else:
            # Deterministic moment: exact agreement or a hard failure.
            z = 0.0 if got == expected else np.inf
        rows.append(CheckRow(
            arm=arm, moment=name, predicted=float(expected),
            sampled=float(got), se=float(se), z=float(z),
        ))
    return rows


def empirical_check(params: ExperimentParams, noise: NoiseModel,
                    initial: GaussianState, n_shots: int, seed: int,
                    z_max: float = 5.0) -> EmpiricalCheck:
    """Simulate both arms and z-score every sampled moment against its
    closed-form prediction."""
    records = simulate_shots(params, noise, initial, n_shots, seed)
    sampled_atoms, sampled_ref = sample_moments(records)
    rows = _compare("with_atoms", sampled_atoms,
                    predicted_moments(params, noise, initial))
    rows += _compare("no_atoms", sampled_ref,
                     no_atoms_moments(params, initial))
    return EmpiricalCheck(rows=tuple(rows), z_max=z_max)
