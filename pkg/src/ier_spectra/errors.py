"""Exception types shared across the package.

Each maps to a CLI exit code: configuration and domain problems exit 2,
solver non-convergence exits 3, resource-cap refusals exit 4.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid argument, configuration, or domain violation."""

    exit_code = 2


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    exit_code = 3


class ResourceError(RuntimeError):
    """A computation would exceed a hard resource cap."""

    exit_code = 4
