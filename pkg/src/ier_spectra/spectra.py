"""Eigenvalues and empirical spectral statistics: ESD reports, moments,
Stieltjes transforms, resolvent diagonals, Levy distances, and the
Hoffman-Wielandt bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .ensembles import Adjacency
from .errors import ConfigError, ResourceError

MAX_EIGEN_N = 20_000


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    if n > MAX_EIGEN_N:
        raise ResourceError(f"dense eigensolver capped at N = {MAX_EIGEN_N}, got {n}")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    gap = float(np.abs(m - m.T).max()) if m.size else 0.0
    if gap > 1e-12 * scale:
        raise ConfigError(f"matrix asymmetric: max |M - M^T| = {gap}")
    return m


def eigenvalues_symmetric(m: np.ndarray) -> np.ndarray:
    """Return all eigenvalues of a real symmetric matrix, ascending."""
    return np.linalg.eigvalsh(_check_symmetric(m))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """A full symmetric eigendecomposition, reusable across resolvent queries."""

    values: np.ndarray
    vectors: np.ndarray


def eigensystem(m: np.ndarray) -> EigenSystem:
    """Return eigenvalues (ascending) and orthonormal eigenvectors."""
    w, v = np.linalg.eigh(_check_symmetric(m))
    return EigenSystem(values=w, vectors=v)


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """One matrix's empirical spectral summary."""

    eigenvalues: np.ndarray
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    moments: dict[int, float]
    config_hash: str
    seed: int
    scale: float


DEFAULT_MOMENT_ORDERS = (0, 1, 2, 3, 4, 5, 6)

_MAX_AUTO_BINS = 4096


def _histogram(eigs: np.ndarray, bins: int | str) -> tuple[np.ndarray, np.ndarray]:
    # Width-based rules (fd, auto, scott) ask for an unboundedly large bin
    # count when the spread estimator collapses while the range stays finite,
    # e.g. a near-atomic spectrum with one outlier; cap the automatic count.
    if isinstance(bins, str) and eigs.size:
        spread = float(np.ptp(eigs))
        iqr = float(np.subtract(*np.percentile(eigs, [75.0, 25.0])))
        fd_width = 2.0 * iqr / eigs.size ** (1.0 / 3.0)
        if fd_width > 0.0 and spread / fd_width > _MAX_AUTO_BINS:
            bins = _MAX_AUTO_BINS
    try:
        return np.histogram(eigs, bins=bins)
    except MemoryError:
        return np.histogram(eigs, bins=_MAX_AUTO_BINS)


def build_spectral_report(
    m: np.ndarray,
    config_hash: str = "",
    seed: int = 0,
    scale: float = 1.0,
    moment_orders: tuple[int, ...] = DEFAULT_MOMENT_ORDERS,
    bins: int | str = "fd",
) -> SpectralReport:
    """Eigendecompose a scaled matrix and summarize its ESD."""
    eigs = eigenvalues_symmetric(m)
    counts, edges = _histogram(eigs, bins)
    moments = {k: float(np.mean(eigs ** k)) for k in moment_orders}
    return SpectralReport(
        eigenvalues=eigs,
        bin_edges=edges,
        bin_counts=counts,
        moments=moments,
        config_hash=config_hash,
        seed=seed,
        scale=scale,
    )


def empirical_moment(report: SpectralReport, k: int) -> float:
    """Return the k-th empirical moment (1/N) sum of eigenvalue powers."""
    if k < 0:
        raise ConfigError("moment order must be nonnegative")
    return float(np.mean(report.eigenvalues ** k))


def empirical_stieltjes(report: SpectralReport, z: complex) -> complex:
    """Return (1/N) sum 1/(eig - z) for Im z > 0."""
    if z.imag <= 0:
        raise ConfigError("Stieltjes transform requires Im z > 0")
    return complex(np.mean(1.0 / (report.eigenvalues - z)))


def resolvent_diagonal(m: np.ndarray | EigenSystem, z: complex) -> np.ndarray:
    """Return the diagonal of (M - z)^{-1} for Im z > 0."""
    if z.imag <= 0:
        raise ConfigError("resolvent requires Im z > 0")
    sys = m if isinstance(m, EigenSystem) else eigensystem(m)
    return (sys.vectors**2) @ (1.0 / (sys.values - z))


def compute_GN(m: np.ndarray | EigenSystem, u: float, z: complex) -> complex:
    """Return (1/N) sum_i exp(i u r_ii(z)) for u in [0, 1]."""
    if not 0.0 <= u <= 1.0:
        raise ConfigError("u must lie in [0, 1]")
    diag = resolvent_diagonal(m, z)
    return complex(np.mean(np.exp(1j * u * diag)))


def _step_cdf(values: np.ndarray, x: np.ndarray, side: str) -> np.ndarray:
    return np.searchsorted(values, x, side=side) / values.size


def _levy_feasible(a: np.ndarray, b: np.ndarray, h: float) -> bool:
    # F(x) <= G(x+h) + h and G(x) <= F(x+h) + h for all x, checked at the
    # step points and at left limits of the down-jumps.
    slack = 1e-12
    for f, g in ((a, b), (b, a)):
        up = _step_cdf(f, f, "right") - _step_cdf(g, f + h, "right")
        if up.size and up.max() > h + slack:
            return False
        down = _step_cdf(f, g - h, "left") - _step_cdf(g, g, "left")
        if down.size and down.max() > h + slack:
            return False
    return True


def levy_distance(r1: SpectralReport | np.ndarray, r2: SpectralReport | np.ndarray) -> float:
    """Return the Levy metric between two empirical spectral distributions."""
    a = np.sort(np.asarray(r1.eigenvalues if isinstance(r1, SpectralReport) else r1, dtype=float))
    b = np.sort(np.asarray(r2.eigenvalues if isinstance(r2, SpectralReport) else r2, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ConfigError("empty spectrum")
    if a.size == b.size and np.array_equal(a, b):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if _levy_feasible(a, b, mid):
            hi = mid
        else:
            lo = mid
    return hi


def hw_bound(ma: np.ndarray, mb: np.ndarray) -> float:
    """Return (1/N) sum of squared entry differences (Hoffman-Wielandt)."""
    ma = np.asarray(ma, dtype=float)
    mb = np.asarray(mb, dtype=float)
    if ma.shape != mb.shape or ma.ndim != 2 or ma.shape[0] != ma.shape[1]:
        raise ConfigError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    d = ma - mb
    return float(np.sum(d * d) / ma.shape[0])


def hw_bound_adjacency(
    adj_a: Adjacency,
    adj_b: Adjacency,
    scale_a: float,
    scale_b: float,
) -> float:
    """Hoffman-Wielandt bound for two scaled adjacencies from their edge sets
    alone, avoiding the dense N x N difference. scale_a and scale_b are the
    values a unit entry takes after scaling (1 / scale_factor)."""
    if adj_a.n != adj_b.n:
        raise ConfigError(f"size mismatch: {adj_a.n} vs {adj_b.n}")
    ea = {(int(i), int(j)) for i, j in adj_a.edges}
    eb = {(int(i), int(j)) for i, j in adj_b.edges}
    la = {int(i) for i in adj_a.loops}
    lb = {int(i) for i in adj_b.loops}
    gap = (scale_a - scale_b) ** 2
    total = 2.0 * (
        gap * len(ea & eb)
        + scale_a**2 * len(ea - eb)
        + scale_b**2 * len(eb - ea)
    )
    total += gap * len(la & lb) + scale_a**2 * len(la - lb) + scale_b**2 * len(lb - la)
    return total / adj_a.n


def _to_csr(adj: Adjacency) -> scipy.sparse.csr_matrix:
    n = adj.n
    i = np.concatenate([adj.edges[:, 0] - 1, adj.edges[:, 1] - 1, adj.loops - 1])
    j = np.concatenate([adj.edges[:, 1] - 1, adj.edges[:, 0] - 1, adj.loops - 1])
    data = np.ones(i.size)
    return scipy.sparse.csr_matrix((data, (i, j)), shape=(n, n))


def empirical_trace_moment(adj: Adjacency, lam: float, k: int) -> float:
    """Return (1/N) Tr (M / sqrt(lam))^k for even k in {2, 4} without
    eigendecomposition (sparse paths)."""
    if lam <= 0:
        raise ConfigError("lam must be positive")
    n = adj.n
    if k == 2:
        tr2 = 2.0 * adj.edge_count() + adj.loops.size
        return tr2 / (n * lam)
    if k == 4:
        a = _to_csr(adj)
        a2 = a @ a
        tr4 = float(a2.multiply(a2).sum())
        return tr4 / (n * lam**2)
    raise ConfigError("sparse trace moments support k in {2, 4}")
