"""One-pulse dynamics: linear map plus additive noise.

Each probe pulse k acts on the stacked state as

    mean -> M_k mean,        cov -> M_k cov M_k' + N_k

where M_k is the identity except for

* the spin block diagonal, scaled by the atomic survival factor r_A,
* pulse k's block diagonal, scaled by the optical transmission r_L,
* the meter coupling  (S_y of pulse k  <-  J_z)  with weight kappa,
* the back-action     (J_y            <-  S_z of pulse k)  with weight
  kappa_b,

and N_k embeds one 6x6 noise matrix over (J_x, J_y, J_z, S_x, S_y, S_z)
onto the spin block and pulse k's block.  Pulses already consumed and
pulses not yet arrived are untouched, so the matrix for pulse 2 is the
pulse-1 matrix conjugated by the permutation that swaps the two pulse
blocks (and likewise for pulse 3).

kappa = g*tau*<S_x> and kappa_b = g*tau*<J_x> are fixed at their
calibration values; neither is rescaled as atoms or photons are lost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import GaussianState, Layout, _require_symmetric
from .errors import LayoutError

__all__ = [
    "ExperimentParams",
    "NoiseModel",
    "interaction_matrix",
    "exchange_matrix",
    "noise_matrix",
    "apply_pulse",
]


@dataclass(frozen=True)
class ExperimentParams:
    """Coupling and loss parameters shared by all pulses.

    Attributes
    ----------
    g_tau : float
        Integrated coupling rate g*tau of one pulse.
    mean_sx : float
        Calibration Stokes polarization <S_x> of one pulse.
    mean_jx : float
        Calibration spin polarization <J_x>.
    r_a : float
        Fraction of atoms surviving one pulse, in [0, 1].
    r_l : float
        Optical field transmission of one pulse, in [0, 1].
    """

    g_tau: float
    mean_sx: float
    mean_jx: float
    r_a: float = 1.0
    r_l: float = 1.0

    def __post_init__(self) -> None:
        for name in ("r_a", "r_l"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    @property
    def kappa(self) -> float:
        """Meter coupling weight g*tau*<S_x>."""
        return self.g_tau * self.mean_sx

    @property
    def kappa_back(self) -> float:
        """Back-action weight g*tau*<J_x>."""
        return self.g_tau * self.mean_jx

    @classmethod
    def from_kappa(cls, kappa: float, mean_sx: float, mean_jx: float,
                   r_a: float = 1.0, r_l: float = 1.0) -> "ExperimentParams":
        """Build from the meter coupling instead of the raw rate."""
        if mean_sx == 0.0:
            raise ValueError("mean_sx must be nonzero to infer g_tau from kappa")
        return cls(g_tau=kappa / mean_sx, mean_sx=mean_sx, mean_jx=mean_jx,
                   r_a=r_a, r_l=r_l)


@dataclass(frozen=True)
class NoiseModel:
    """Symmetric 6x6 per-pulse noise over (J_x, J_y, J_z, S_x, S_y, S_z).

    The same matrix is added at every pulse (embedded onto the spin block
    and the active pulse's block).  Entries may correlate the spin-noise
    and meter-noise channels; the matrix is not required to be positive
    semidefinite here (estimators may produce slightly indefinite fits),
    only the sampler insists on factorability.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (6, 6):
            raise ValueError(f"noise matrix must be 6x6, got {matrix.shape}")
        matrix = _require_symmetric(matrix, "noise matrix")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(np.zeros((6, 6)))

    @classmethod
    def from_entries(cls, entries: Mapping[tuple[int, int], float]) -> "NoiseModel":
        """Build from 1-based (row, col) entries; symmetry is implied."""
        matrix = np.zeros((6, 6))
        for (i, j), value in entries.items():
            if not (1 <= i <= 6 and 1 <= j <= 6):
                raise ValueError(f"noise entry index {(i, j)} outside 1..6")
            matrix[i - 1, j - 1] = value
            matrix[j - 1, i - 1] = value
        return cls(matrix)

    # Entries the measurement statistics actually depend on, in 1-based
    # naming: spin noise N33, spin-meter cross noise N35, meter noise N55.
    @property
    def n33(self) -> float:
        return float(self.matrix[2, 2])

    @property
    def n35(self) -> float:
        return float(self.matrix[2, 4])

    @property
    def n55(self) -> float:
        return float(self.matrix[4, 4])

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)


def _check_pulse(pulse: int, layout: Layout) -> None:
    if not 1 <= pulse <= layout.n_pulses:
        raise LayoutError(
            f"pulse must be in 1..{layout.n_pulses}, got {pulse}"
        )


def interaction_matrix(params: ExperimentParams, pulse: int, layout: Layout,
                       coupling_sign: float = 1.0) -> np.ndarray:
    """Linear one-pulse map M_k for ``pulse`` k (1-based).

    Identity on every inactive pulse block; the spin diagonal carries r_A,
    the active block diagonal carries r_L, and the two coupling entries
    carry kappa (meter) and kappa_b (back-action).

    ``coupling_sign`` flips both coupling entries.  It exists so the
    self-test can demonstrate that measured moments do not depend on the
    sign convention of the interaction; production callers leave it at +1.
    """
    _check_pulse(pulse, layout)
    dim = layout.dimension
    m = np.eye(dim)
    m[:3, :3] *= params.r_a
    active = layout.block_slice(pulse)
    m[active, active] = params.r_l * np.eye(3)
    meter_row = active.start + 1  # S_y of the active pulse
    sz_col = active.start + 2     # S_z of the active pulse
    jz = layout.index("J_z")
    jy = layout.index("J_y")
    m[meter_row, jz] = coupling_sign * params.kappa
    m[jy, sz_col] = coupling_sign * params.kappa_back
    return m


def exchange_matrix(block_a: int, block_b: int, layout: Layout) -> np.ndarray:
    """Permutation matrix swapping two pulse blocks (1-based).

    Conjugating the pulse-1 map or noise embedding by the exchange of
    pulses 1 and k yields the pulse-k version, which is what the dynamics
    tests lean on.  Swapping a block with itself gives the identity.
    """
    for block in (block_a, block_b):
        if not 1 <= block <= layout.n_pulses:
            raise LayoutError(
                f"pulse block must be in 1..{layout.n_pulses}, got {block}"
            )
    x = np.eye(layout.dimension)
    a = layout.block_slice(block_a)
    b = layout.block_slice(block_b)
    x[a, a] = 0.0
    x[b, b] = 0.0
    x[a.start:a.stop, b.start:b.stop] = np.eye(3)
    x[b.start:b.stop, a.start:a.stop] = np.eye(3)
    return x


def noise_matrix(noise: NoiseModel, pulse: int, layout: Layout) -> np.ndarray:
    """Embed the 6x6 per-pulse noise onto the full layout for ``pulse``."""
    _check_pulse(pulse, layout)
    active = layout.block_slice(pulse)
    idx = np.r_[0:3, active.start:active.stop]
    out = np.zeros((layout.dimension, layout.dimension))
    out[np.ix_(idx, idx)] = noise.matrix
    return out


def apply_pulse(state: GaussianState, params: ExperimentParams,
                noise: NoiseModel, pulse: int,
                coupling_sign: float = 1.0) -> GaussianState:
    """Propagate a state through one pulse: M cov M' + N and M mean."""
    m = interaction_matrix(params, pulse, state.layout, coupling_sign)
    n = noise_matrix(noise, pulse, state.layout)
    return GaussianState(
        layout=state.layout,
        mean=m @ state.mean,
        cov=m @ state.cov @ m.T + n,
    )
