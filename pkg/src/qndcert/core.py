"""Phase-space layout and Gaussian state container.

The phase space stacks one collective-spin block and one Stokes block per
probe pulse, in pulse order:

    (J_x, J_y, J_z, P_x, P_y, P_z, Q_x, Q_y, Q_z, R_x, R_y, R_z)

with pulses labelled P, Q, R.  A layout with ``n_pulses`` pulses has
dimension ``3 * (1 + n_pulses)``.  States carry a mean vector and a
symmetric covariance matrix over these components; covariances are
symmetrized on construction so every downstream consumer can rely on
exact symmetry.

Positivity is checked on construction: eigenvalues below ``-1e-9 * trace``
raise when the ``QNDC_STRICT_PSD=1`` environment variable is set and emit a
:class:`~qndcert.errors.PositivityWarning` otherwise.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    LayoutError,
    NotPositiveSemidefiniteError,
    NotSymmetricError,
    PositivityWarning,
)

PULSE_NAMES = ("P", "Q", "R")
AXES = ("x", "y", "z")

SYMMETRY_ATOL = 1e-12
PSD_RTOL = 1e-9


def strict_psd_enabled() -> bool:
    """True when QNDC_STRICT_PSD=1, turning PSD warnings into errors."""
    return os.environ.get("QNDC_STRICT_PSD", "0") == "1"


def _as_square(matrix, size: int, what: str) -> np.ndarray:
    out = np.asarray(matrix, dtype=float)
    if out.shape != (size, size):
        raise DimensionMismatchError(
            f"{what} must have shape {(size, size)}, got {out.shape}"
        )
    return out


def _require_symmetric(matrix: np.ndarray, what: str) -> np.ndarray:
    gap = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if gap > SYMMETRY_ATOL:
        raise NotSymmetricError(f"{what} departs from symmetry by {gap:.3e}")
    # Exactly symmetric output; (a + a) / 2 == a, so symmetric input is
    # returned bit-identical.
    return (matrix + matrix.T) / 2.0


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Layout:
    """Component bookkeeping for a given pulse count (1 to 3)."""

    n_pulses: int

    def __post_init__(self) -> None:
        if self.n_pulses not in (1, 2, 3):
            raise LayoutError(f"n_pulses must be 1, 2 or 3, got {self.n_pulses!r}")

    @property
    def dimension(self) -> int:
        return 3 * (1 + self.n_pulses)

    @property
    def labels(self) -> tuple[str, ...]:
        names = ("J",) + PULSE_NAMES[: self.n_pulses]
        return tuple(f"{name}_{axis}" for name in names for axis in AXES)

    def index(self, label: str) -> int:
        """0-based position of a component label such as ``\"P_y\"``."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(
                f"unknown component {label!r} for a {self.n_pulses}-pulse layout"
            ) from None

    def block_slice(self, block: int) -> slice:
        """Slice of block ``block``: 0 is the spin block, k >= 1 is pulse k."""
        if not 0 <= block <= self.n_pulses:
            raise LayoutError(
                f"block must be in 0..{self.n_pulses}, got {block}"
            )
        return slice(3 * block, 3 * block + 3)

    @property
    def meter_labels(self) -> tuple[str, ...]:
        """y-component labels of each pulse, in measurement order."""
        return tuple(f"{name}_y" for name in PULSE_NAMES[: self.n_pulses])

    @property
    def meter_indices(self) -> tuple[int, ...]:
        return tuple(self.index(label) for label in self.meter_labels)


@dataclass(frozen=True)
class AtomicBlock:
    """Collective-spin input: mean x-polarization and 3x3 covariance."""

    mean_jx: float
    cov: np.ndarray

    def __post_init__(self) -> None:
        cov = _require_symmetric(_as_square(self.cov, 3, "atomic covariance"),
                                 "atomic covariance")
        object.__setattr__(self, "mean_jx", float(self.mean_jx))
        object.__setattr__(self, "cov", _frozen(cov))

    @classmethod
    def coherent(cls, n_atoms: float) -> "AtomicBlock":
        """Fully x-polarized ensemble: <J_x> = N/2, var(J_y) = var(J_z) = N/4.

        The polarization itself is treated as a classical number, so the
        J_x row and column are zero.
        """
        n_atoms = float(n_atoms)
        if n_atoms < 0:
            raise ValueError(f"n_atoms must be nonnegative, got {n_atoms}")
        return cls(mean_jx=n_atoms / 2.0,
                   cov=np.diag([0.0, n_atoms / 4.0, n_atoms / 4.0]))

    @property
    def css_variance(self) -> float:
        """Spin variance of a coherent (projection-noise limited) state with
        this polarization: |<J_x>| / 2."""
        return abs(self.mean_jx) / 2.0


@dataclass(frozen=True)
class OpticalBlock:
    """Stokes input for all pulses: mean x-polarization (shared) and the
    3n x 3n covariance, which may correlate different pulses."""

    mean_sx: float
    cov: np.ndarray

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 3 != 0 \
                or not 3 <= cov.shape[0] <= 9:
            raise DimensionMismatchError(
                f"optical covariance must be 3n x 3n with n in 1..3, got {cov.shape}"
            )
        cov = _require_symmetric(cov, "optical covariance")
        object.__setattr__(self, "mean_sx", float(self.mean_sx))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def n_pulses(self) -> int:
        return self.cov.shape[0] // 3

    @classmethod
    def coherent(cls, n_photons: float, n_pulses: int) -> "OpticalBlock":
        """Independent x-polarized coherent pulses of N photons each:
        <S_x> = N/2 and var(S_y) = var(S_z) = N/4 per pulse."""
        n_photons = float(n_photons)
        if n_photons < 0:
            raise ValueError(f"n_photons must be nonnegative, got {n_photons}")
        if n_pulses not in (1, 2, 3):
            raise LayoutError(f"n_pulses must be 1, 2 or 3, got {n_pulses!r}")
        one = np.diag([0.0, n_photons / 4.0, n_photons / 4.0])
        cov = np.zeros((3 * n_pulses, 3 * n_pulses))
        for k in range(n_pulses):
            cov[3 * k:3 * k + 3, 3 * k:3 * k + 3] = one
        return cls(mean_sx=n_photons / 2.0, cov=cov)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and symmetric covariance over a :class:`Layout`.

    The covariance is symmetrized on construction and both arrays are
    frozen, so states can be shared without defensive copies.
    """

    layout: Layout
    mean: np.ndarray
    cov: np.ndarray
    check_psd: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        dim = self.layout.dimension
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (dim,):
            raise DimensionMismatchError(
                f"mean must have shape ({dim},), got {mean.shape}"
            )
        cov = _require_symmetric(_as_square(self.cov, dim, "covariance"),
                                 "covariance")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))
        if self.check_psd:
            _validate_psd(self.cov)

    @property
    def dimension(self) -> int:
        return self.layout.dimension


def _validate_psd(cov: np.ndarray) -> None:
    min_eig = float(np.linalg.eigvalsh(cov)[0])
    tol = PSD_RTOL * max(float(np.trace(cov)), 0.0)
    if min_eig < -tol:
        message = (
            f"covariance has eigenvalue {min_eig:.6e} below tolerance {-tol:.6e}"
        )
        if strict_psd_enabled():
            raise NotPositiveSemidefiniteError(message)
        warnings.warn(message, PositivityWarning, stacklevel=3)


def make_initial_state(atomic: AtomicBlock, optical: OpticalBlock,
                       layout: Layout) -> GaussianState:
    """Assemble the pre-interaction state from its spin and light inputs.

    The two blocks are placed on the diagonal with no cross-correlation:
    atoms and the incoming light are prepared independently.  Cross-pulse
    correlations inside the optical block (classical technical noise shared
    between pulses) are carried through untouched.

    Parameters
    ----------
    atomic, optical : input blocks; the optical block must cover exactly
        ``layout.n_pulses`` pulses.
    layout : target component layout.
    """
    if optical.n_pulses != layout.n_pulses:
        raise DimensionMismatchError(
            f"optical block covers {optical.n_pulses} pulses, "
            f"layout expects {layout.n_pulses}"
        )
    dim = layout.dimension
    mean = np.zeros(dim)
    mean[layout.index("J_x")] = atomic.mean_jx
    for name in PULSE_NAMES[: layout.n_pulses]:
        mean[layout.index(f"{name}_x")] = optical.mean_sx
    cov = np.zeros((dim, dim))
    cov[:3, :3] = atomic.cov
    cov[3:, 3:] = optical.cov
    return GaussianState(layout=layout, mean=mean, cov=cov)


def get_entry(state: GaussianState, row: str, col: str) -> float:
    """Covariance entry addressed by component labels."""
    i = state.layout.index(row)
    j = state.layout.index(col)
    return float(state.cov[i, j])
