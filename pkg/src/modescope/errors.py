"""Exception types shared across the toolkit."""

from __future__ import annotations


class ModescopeError(Exception):
    """Base class for toolkit errors."""


class DomainError(ModescopeError, ValueError):
    """Input outside the domain of a model function."""


class CutoffError(ModescopeError):
    """Fock-space truncation too small for the simulated photon population."""


class ExtractionError(ModescopeError):
    """A decay rate or T2 could not be extracted from a time series."""

    def __init__(self, message: str, residual_norm: float | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm


class NoFeatureError(ModescopeError):
    """A sweep window holds no resolvable dephasing feature."""


class FitError(ModescopeError):
    """A model fit failed to converge. ``result`` carries the diagnostics."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(ModescopeError):
    """Invalid run configuration."""
