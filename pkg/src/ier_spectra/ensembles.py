"""Sampling of inhomogeneous random graphs with counter-based randomness,
matrix scaling, and maximally coupled model pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import ConfigError
from .kernels import Kernel, WeightModel, draw_weights, eval_kernel_grid

VARIANTS = ("generic_ier", "homogeneous", "chung_lu", "grg", "norros_riettu")
DEGREE_VARIANTS = ("chung_lu", "grg", "norros_riettu")

_WEIGHT_TAG = 0x51
_DEGREE_TAG = 0x52
_EDGE_TAG = 0x53

_MAX_N = 2**32 - 1
_MAX_REPLICATE = 2**16 - 1


def _generator(seed: int, tag: int, replicate: int, row: int) -> Generator:
    # Exact 128-bit key packing keeps streams collision-free and
    # order-independent across rows and replicates.
    key0 = np.uint64(seed & (2**64 - 1))
    key1 = np.uint64((tag << 48) | (replicate << 32) | row)
    return Generator(Philox(key=[key0, key1]))


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    """Everything needed to sample one graph model deterministically."""

    n: int
    kernel: Kernel
    weights: WeightModel
    variant: str = "generic_ier"
    seed: int = 0
    lam: float | None = None
    eps: float | None = None
    degrees: np.ndarray | None = None
    zero_diagonal: bool = False

    def __post_init__(self) -> None:
        if not 1 <= self.n <= _MAX_N:
            raise ConfigError(f"N must be in 1..{_MAX_N}, got {self.n}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.variant not in DEGREE_VARIANTS:
            if (self.lam is None) == (self.eps is None):
                raise ConfigError("exactly one of lam or eps must be set")
            if self.lam is not None and self.lam < 0:
                raise ConfigError("lam must be nonnegative")
            if self.eps is not None and not 0 <= self.eps <= 1:
                raise ConfigError("eps must lie in [0, 1]")
        if self.degrees is not None:
            d = np.asarray(self.degrees, dtype=float)
            if d.shape != (self.n,) or np.any(d < 0) or d.sum() <= 0:
                raise ConfigError("degrees must be length-N, nonnegative, with positive sum")
            object.__setattr__(self, "degrees", d)


def realized_weights(config: EnsembleConfig) -> np.ndarray:
    """Return the weight vector this config samples with (deterministic)."""
    if config.weights.variant == "empirical":
        if config.weights.atoms.size != config.n:
            raise ConfigError("empirical weights must have length N")
        return config.weights.atoms
    rng = _generator(config.seed, _WEIGHT_TAG, 0, 0)
    return draw_weights(config.weights, config.n, rng)


def realized_degrees(config: EnsembleConfig) -> np.ndarray:
    """Return the degree vector for degree-based variants.

    Defaults to i.i.d. uniform integers in [1, 5] drawn from the config's
    seed when no vector was supplied.
    """
    if config.variant not in DEGREE_VARIANTS:
        raise ConfigError(f"variant {config.variant!r} has no degree vector")
    if config.degrees is not None:
        return config.degrees
    rng = _generator(config.seed, _DEGREE_TAG, 0, 0)
    return rng.integers(1, 6, size=config.n).astype(float)


def realized_sparsity(config: EnsembleConfig) -> tuple[float, float]:
    """Return (eps_N, N eps_N) as realized by this config."""
    if config.variant in DEGREE_VARIANTS:
        d = realized_degrees(config)
        m1 = float(d.sum())
        m_inf = float(d.max())
        eps = m_inf**2 / m1
        return eps, config.n * eps
    if config.eps is not None:
        return float(config.eps), config.n * float(config.eps)
    return float(config.lam) / config.n, float(config.lam)


def _prob_row(config: EnsembleConfig, i: int, w: np.ndarray | None, d: np.ndarray | None) -> np.ndarray:
    """Return p_ij for j = i..N (1-based row index i)."""
    n = config.n
    if config.variant in DEGREE_VARIANTS:
        di = d[i - 1]
        dj = d[i - 1 :]
        m1 = float(d.sum())
        if config.variant == "chung_lu":
            return np.minimum(di * dj / m1, 1.0)
        if config.variant == "grg":
            prod = di * dj
            return prod / (m1 + prod)
        return -np.expm1(-(di * dj) / m1)
    eps = float(config.eps) if config.eps is not None else float(config.lam) / n
    if config.variant == "homogeneous":
        f_row = np.full(n - i + 1, config.kernel.const)
    else:
        f_row = eval_kernel_grid(config.kernel, np.array([w[i - 1]]), w[i - 1 :])[0]
    return np.minimum(eps * f_row, 1.0)


def edge_probability(config: EnsembleConfig, i: int, j: int) -> float:
    """Return p_ij for 1-based vertex indices."""
    if not (1 <= i <= config.n and 1 <= j <= config.n):
        raise ConfigError(f"indices must lie in 1..{config.n}")
    if j < i:
        i, j = j, i
    w = realized_weights(config) if config.variant not in DEGREE_VARIANTS else None
    d = realized_degrees(config) if config.variant in DEGREE_VARIANTS else None
    return float(_prob_row(config, i, w, d)[j - i])


@dataclass(frozen=True, eq=False)
class Adjacency:
    """A symmetric 0/1 matrix stored as a sorted upper-triangle edge list."""

    n: int
    edges: np.ndarray
    loops: np.ndarray
    zero_diagonal: bool

    def edge_count(self) -> int:
        """Return the number of off-diagonal unordered edges."""
        return int(self.edges.shape[0])


def sample_adjacency(config: EnsembleConfig, replicate: int = 0) -> Adjacency:
    """Sample one adjacency matrix; deterministic in (config, replicate).

    Each row i draws its uniforms from a stream keyed by (seed, replicate, i),
    so results do not depend on evaluation order. The diagonal consumes its
    uniform even when zero_diagonal, keeping off-diagonal entries identical
    across that flag.
    """
    if not 0 <= replicate <= _MAX_REPLICATE:
        raise ConfigError(f"replicate must be in 0..{_MAX_REPLICATE}")
    w = realized_weights(config) if config.variant not in DEGREE_VARIANTS else None
    d = realized_degrees(config) if config.variant in DEGREE_VARIANTS else None
    rows_i: list[np.ndarray] = []
    rows_j: list[np.ndarray] = []
    loops: list[int] = []
    n = config.n
    for i in range(1, n + 1):
        u = _generator(config.seed, _EDGE_TAG, replicate, i).random(n - i + 1)
        p = _prob_row(config, i, w, d)
        hit = u < p
        if hit[0] and not config.zero_diagonal:
            loops.append(i)
        hit[0] = False
        js = np.nonzero(hit)[0] + i
        if js.size:
            rows_i.append(np.full(js.size, i, dtype=np.int64))
            rows_j.append(js.astype(np.int64))
    if rows_i:
        edges = np.column_stack([np.concatenate(rows_i), np.concatenate(rows_j)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return Adjacency(
        n=n,
        edges=edges,
        loops=np.asarray(loops, dtype=np.int64),
        zero_diagonal=config.zero_diagonal,
    )


def to_dense(adj: Adjacency) -> np.ndarray:
    """Return the dense symmetric 0/1 matrix."""
    a = np.zeros((adj.n, adj.n))
    if adj.edges.size:
        i = adj.edges[:, 0] - 1
        j = adj.edges[:, 1] - 1
        a[i, j] = 1.0
        a[j, i] = 1.0
    if adj.loops.size:
        k = adj.loops - 1
        a[k, k] = 1.0
    return a


def scale_factor(config: EnsembleConfig, mode: str = "sparse") -> float:
    """Return the eigenvalue scale: sqrt(lambda) or the dense variance scale."""
    eps, lam = realized_sparsity(config)
    if mode == "sparse":
        if lam <= 0:
            raise ConfigError("sparse scaling requires N eps_N > 0")
        return float(np.sqrt(lam))
    if mode == "dense":
        v = config.n * eps * (1.0 - eps)
        if v <= 0:
            raise ConfigError("dense scaling requires N eps_N (1 - eps_N) > 0")
        return float(np.sqrt(v))
    raise ConfigError(f"unknown scaling mode {mode!r}")


def scale_matrix(adj: Adjacency, config: EnsembleConfig, mode: str = "sparse") -> np.ndarray:
    """Return the dense scaled matrix M / scale_factor."""
    a = to_dense(adj)
    a /= scale_factor(config, mode)
    return a


def coupled_sample(
    config_a: EnsembleConfig,
    config_b: EnsembleConfig,
    seed: int,
    replicate: int = 0,
) -> tuple[Adjacency, Adjacency]:
    """Sample both models with one shared uniform per edge.

    The shared uniform realizes the maximal coupling: the indicators differ
    with probability exactly |p_ij - q_ij|.
    """
    if config_a.n != config_b.n:
        raise ConfigError("coupled configs must share N")
    n = config_a.n
    wa = realized_weights(config_a) if config_a.variant not in DEGREE_VARIANTS else None
    da = realized_degrees(config_a) if config_a.variant in DEGREE_VARIANTS else None
    wb = realized_weights(config_b) if config_b.variant not in DEGREE_VARIANTS else None
    db = realized_degrees(config_b) if config_b.variant in DEGREE_VARIANTS else None
    out: list[tuple[list, list, list]] = [([], [], []), ([], [], [])]
    for i in range(1, n + 1):
        u = _generator(seed, _EDGE_TAG, replicate, i).random(n - i + 1)
        for slot, (cfg, w, d) in enumerate(((config_a, wa, da), (config_b, wb, db))):
            p = _prob_row(cfg, i, w, d)
            hit = u < p
            if hit[0] and not cfg.zero_diagonal:
                out[slot][2].append(i)
            hit[0] = False
            js = np.nonzero(hit)[0] + i
            if js.size:
                out[slot][0].append(np.full(js.size, i, dtype=np.int64))
                out[slot][1].append(js.astype(np.int64))
    result = []
    for slot, cfg in enumerate((config_a, config_b)):
        ri, rj, loops = out[slot]
        if ri:
            edges = np.column_stack([np.concatenate(ri), np.concatenate(rj)])
        else:
            edges = np.empty((0, 2), dtype=np.int64)
        result.append(
            Adjacency(
                n=n,
                edges=edges,
                loops=np.asarray(loops, dtype=np.int64),
                zero_diagonal=cfg.zero_diagonal,
            )
        )
    return result[0], result[1]
