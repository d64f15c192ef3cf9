"""Exception hierarchy."""


class DynlabError(Exception):
    """Base class for all dynlab failures."""


class RootFindingError(DynlabError):
    """Simultaneous root iteration failed to converge; carries residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IndifferentCycleError(DynlabError):
    """A detected cycle has multiplier too close to 1 to classify."""


class LiftError(DynlabError):
    """Branch-following of an inverse branch was rejected."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class GeometryError(DynlabError):
    """Containment/orientation precondition violated."""


class RayError(DynlabError):
    """External ray tracing failed or the ray did not land."""

    def __init__(self, message, last_potential=None):
        super().__init__(message)
        self.last_potential = last_potential


class PuzzleError(DynlabError):
    """Puzzle construction failed (non-landing ray, overlap, ...)."""


class ClassificationError(DynlabError):
    """A point classified as non-escaping turned out to escape (or similar)."""


class ConfigError(DynlabError):
    """Malformed experiment configuration."""
