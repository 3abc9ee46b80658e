"""Exception and warning types shared across the package."""

from __future__ import annotations


class QndError(Exception):
    """Base class for all errors raised by this package."""


class LayoutError(QndError, ValueError):
    """Unknown component label, or a pulse/block index outside the layout."""


class DimensionMismatchError(QndError, ValueError):
    """An array does not have the shape the phase-space layout requires."""


class NotSymmetricError(QndError, ValueError):
    """A covariance block departs from symmetry beyond tolerance."""


class NotPositiveSemidefiniteError(QndError, ValueError):
    """A covariance failed the PSD check while strict checking is enabled."""


class UndefinedInputError(QndError, ValueError):
    """A closed-form expression was evaluated at a point where it is undefined
    (zero denominator, negative variance input, and similar)."""


class UninformativeCouplingError(QndError):
    """A delta covariance sits at (or below) its noise floor, so ratio
    estimators built on it carry no information."""


class DegenerateCaseError(QndError):
    """An estimator hit a 0/0 combination that admits no unique answer."""


class InconsistentDataError(QndError):
    """Measured statistics violate a structural constraint of the model
    (e.g. a squared-ratio estimate comes out negative)."""


class SamplerUnsupportedError(QndError):
    """A matrix handed to the sampler is too indefinite to factor."""


class ConfigError(QndError, ValueError):
    """Configuration file could not be parsed or validated. The message
    names the offending field or the line/column of the syntax error."""


class RecordError(QndError, ValueError):
    """A shot-record file is malformed or inconsistent with its sidecar."""


class PositivityWarning(UserWarning):
    """Covariance has an eigenvalue below the PSD tolerance; emitted instead
    of an exception when strict checking is off."""
