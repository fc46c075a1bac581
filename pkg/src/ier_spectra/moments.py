"""Limiting spectral moments: sums over special symmetric partitions, their
dense (non-crossing) limits, and semicircle free multiplicative products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResourceError
from .kernels import Kernel, WeightModel, homomorphism_density
from .partitions import (
    Partition,
    build_partition_graph,
    compose_gamma,
    enumerate_nc2,
    enumerate_ss,
    kreweras_complement,
)

MAX_MOMENT_K = 12


@dataclass(frozen=True)
class PartitionContribution:
    """One partition's term in a moment sum."""

    partition: Partition
    gamma_blocks: int
    exponent: int
    density: float


@dataclass(frozen=True)
class MomentReport:
    """A limiting moment with its per-partition decomposition."""

    k: int
    lam: float
    value: float
    per_partition: tuple[PartitionContribution, ...]


def _check_moment_k(k: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ConfigError(f"moment order must be a nonnegative integer, got {k!r}")
    if k > MAX_MOMENT_K:
        raise ResourceError(
            f"moment order {k} exceeds the cap {MAX_MOMENT_K}; "
            "use the Stieltjes solver for the full measure"
        )


def limiting_moment(k: int, lam: float, kernel: Kernel, mu: WeightModel) -> MomentReport:
    """Return the k-th limiting moment at mean degree parameter lam.

    Even k sums lam^(|gamma pi| - 1 - k/2) times the walk-graph density over
    all special symmetric partitions of {1..k}; odd k gives 0.
    """
    _check_moment_k(k)
    if not (lam > 0):
        raise ConfigError(f"lambda must be positive, got {lam!r}")
    if k == 0:
        return MomentReport(k=0, lam=lam, value=1.0, per_partition=())
    if k % 2:
        return MomentReport(k=k, lam=lam, value=0.0, per_partition=())
    contribs = []
    total = 0.0
    for p in enumerate_ss(k):
        gp = compose_gamma(p)
        exponent = len(gp) - 1 - k // 2
        if math.isinf(lam):
            weight = 1.0 if exponent == 0 else 0.0
        else:
            weight = lam**exponent
        density = homomorphism_density(build_partition_graph(p), kernel, mu)
        contribs.append(PartitionContribution(p, len(gp), exponent, density))
        total += weight * density
    return MomentReport(k=k, lam=lam, value=total, per_partition=tuple(contribs))


def dense_moment(k: int, kernel: Kernel, mu: WeightModel) -> float:
    """Return the k-th moment of the dense limit: the non-crossing pair
    partition sum of walk-graph densities."""
    _check_moment_k(k)
    if k == 0:
        return 1.0
    if k % 2:
        return 0.0
    total = 0.0
    for p in enumerate_nc2(k):
        total += homomorphism_density(build_partition_graph(p), kernel, mu)
    return total


def _power_moment(mu: WeightModel, b: int) -> float:
    return float(np.dot(mu.probs, mu.atoms**b))


def free_mult_semicircle_moment(k: int, mu: WeightModel) -> float:
    """Return the k-th moment of the free multiplicative product of mu with
    the standard semicircle law.

    Sums over non-crossing pairings the product of mu's power moments at the
    Kreweras complement's block sizes.
    """
    _check_moment_k(k)
    if k == 0:
        return 1.0
    if k % 2:
        raise ConfigError("free product moments are defined for even k only")
    total = 0.0
    for p in enumerate_nc2(k):
        kc = kreweras_complement(p)
        prod = 1.0
        for block in kc.blocks:
            prod *= _power_moment(mu, len(block))
        total += prod
    return total


def nc2_split(report: MomentReport) -> tuple[float, float]:
    """Return (non-crossing part, remainder) of a moment report's value.

    The non-crossing part collects exponent-zero contributions, which for
    even k are exactly the non-crossing pairings.
    """
    nc2 = sum(c.density for c in report.per_partition if c.exponent == 0)
    if report.k == 0:
        nc2 = 1.0
    return nc2, report.value - nc2
