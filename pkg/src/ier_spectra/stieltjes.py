"""Bessel-kernel fixed point for the sparse limiting Stieltjes transform,
plus the dense integral-equation limit and density reconstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, ConvergenceError
from .kernels import Kernel, WeightModel, eval_kernel_grid, mean_degree_at_nodes

_SERIES_CUT = 12.0
_EXTRAP_SLACK = 1e-6


def _bessel_j1_series(x: np.ndarray) -> np.ndarray:
    # J1(x) = (x/2) sum_m (-x^2/4)^m / (m! (m+1)!), stable for x <= 12.
    term = x / 2.0
    out = term.copy()
    q = x * x / 4.0
    for m in range(1, 40):
        term = term * (-q) / (m * (m + 1))
        out += term
    return out


def _bessel_j1_asymptotic(x: np.ndarray) -> np.ndarray:
    # Large-x expansion with per-element truncation at the smallest term.
    chi = x - 0.75 * np.pi
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    last_size = np.full(x.shape, np.inf)
    for j in range(1, 30):
        term = term * (4.0 - (2 * j - 1) ** 2) / (8.0 * j) / x
        size = np.abs(term)
        active &= size < last_size
        last_size = np.where(active, size, last_size)
        contrib = np.where(active, term, 0.0)
        if j % 2:
            q += contrib * (-1) ** ((j - 1) // 2)
        else:
            p += contrib * (-1) ** (j // 2)
        if not active.any():
            break
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1_array(x: np.ndarray) -> np.ndarray:
    """Return J1 elementwise for nonnegative x, absolute error <= 1e-10."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ConfigError("bessel_j1 requires x >= 0")
    out = np.empty_like(x)
    small = x <= _SERIES_CUT
    if small.any():
        out[small] = _bessel_j1_series(x[small])
    if (~small).any():
        out[~small] = _bessel_j1_asymptotic(x[~small])
    return out


def bessel_j1(x: float) -> float:
    """Return the order-one Bessel function of the first kind at x >= 0."""
    return float(bessel_j1_array(np.asarray(float(x))))


def _composite_gl(a: float, b: float, n_nodes: int, per_panel: int = 16) -> tuple[np.ndarray, np.ndarray]:
    n_panels = max(1, n_nodes // per_panel)
    base_x, base_w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Discretization and stopping parameters for the fixed-point solver."""

    z: complex
    lam: float
    u_max: float
    v_max: float
    n_u: int = 256
    n_v: int = 512
    tol: float = 1e-10
    max_iter: int = 400

    def __post_init__(self) -> None:
        if complex(self.z).imag <= 0:
            raise ConfigError("solver requires Im z > 0")
        if not self.lam > 0:
            raise ConfigError("lam must be positive")
        if self.v_max * complex(self.z).imag < 30.0 - 1e-9:
            raise ConfigError(
                f"V_max * Im z = {self.v_max * complex(self.z).imag:.3f} < 30; "
                "truncation would dominate"
            )
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.n_u < 8 or self.n_v < 16:
            raise ConfigError("grids too small: need n_u >= 8, n_v >= 16")
        if self.v_max / self.lam > self.u_max * (1.0 + _EXTRAP_SLACK):
            raise ConfigError(
                f"V_max/lambda = {self.v_max / self.lam:.6g} exceeds "
                f"U_max = {self.u_max:.6g}; enlarge U_max"
            )


def default_solver_config(
    z: complex,
    lam: float,
    n_u: int = 256,
    n_v: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 400,
) -> SolverConfig:
    """Return a SolverConfig with truncation and resolution chosen from (z, lam)."""
    z = complex(z)
    eta = z.imag
    if eta <= 0:
        raise ConfigError("solver requires Im z > 0")
    v_max = 30.0 / eta
    u_max = v_max / lam
    if n_v is None:
        phase = v_max * abs(z.real) + 2.0 * math.sqrt(u_max * v_max)
        n_v = max(512, 16 * math.ceil(8.0 * phase / (2.0 * np.pi) / 16.0))
        n_v = min(n_v, 16384)
    return SolverConfig(
        z=z, lam=lam, u_max=u_max, v_max=v_max, n_u=n_u, n_v=n_v, tol=tol, max_iter=max_iter
    )


@dataclass(frozen=True, eq=False)
class PhiGrid:
    """The solver state phi(y, u) on weight nodes times u-grid."""

    y_nodes: np.ndarray
    u_nodes: np.ndarray
    values: np.ndarray
    z: complex
    lam: float
    residual: float | None = None
    iterations: int = 0
    extrapolation_count: int = 0


def _u_grid(u_max: float, n_u: int) -> np.ndarray:
    # Geometric clustering near u = 0 where the Stieltjes derivative lives.
    return np.concatenate([[0.0], np.geomspace(u_max * 1e-6, u_max, n_u - 1)])


def weighted_sup_norm(phi_a: PhiGrid, phi_b: PhiGrid) -> float:
    """Return sup |a - b| / sqrt(1 + u) over the shared grid."""
    if (
        phi_a.values.shape != phi_b.values.shape
        or not np.array_equal(phi_a.u_nodes, phi_b.u_nodes)
        or not np.array_equal(phi_a.y_nodes, phi_b.y_nodes)
    ):
        raise ConfigError("grids do not match")
    gap = np.abs(phi_a.values - phi_b.values) / np.sqrt(1.0 + phi_a.u_nodes)[None, :]
    return float(gap.max())


def weighted_norm(phi: PhiGrid) -> float:
    """Return sup |phi| / sqrt(1 + u) over the grid."""
    return float((np.abs(phi.values) / np.sqrt(1.0 + phi.u_nodes)[None, :]).max())


class _Workspace:
    """Precomputed quadrature tables shared by all iterations at fixed (z, lam)."""

    def __init__(self, cfg: SolverConfig, kernel: Kernel, mu: WeightModel):
        self.cfg = cfg
        self.kernel = kernel
        self.mu = mu
        self.y = mu.atoms
        self.u = _u_grid(cfg.u_max, cfg.n_u)
        self.v, self.vw = _composite_gl(0.0, cfg.v_max, cfg.n_v)
        self.d_f = mean_degree_at_nodes(kernel, mu, self.y)
        self.fmat = eval_kernel_grid(kernel, self.y, self.y)
        # K[i, q] = sqrt(u_i) J(2 sqrt(u_i v_q)) / sqrt(v_q) * w_q
        arg = 2.0 * np.sqrt(np.outer(self.u, self.v))
        self.kmat = (
            np.sqrt(self.u)[:, None] * bessel_j1_array(arg) / np.sqrt(self.v)[None, :]
        ) * self.vw[None, :]
        self.p_targets = self.v / cfg.lam
        self.clamped = int(np.sum(self.p_targets > self.u[-1]))
        self.p_eval = np.minimum(self.p_targets, self.u[-1])
        self.vz = 1j * self.v * complex(cfg.z)

    def initial_grid(self) -> PhiGrid:
        vals = np.repeat(self.d_f[:, None].astype(complex), self.u.size, axis=1)
        return PhiGrid(
            y_nodes=self.y, u_nodes=self.u, values=vals, z=complex(self.cfg.z), lam=self.cfg.lam
        )

    def interp_at_v(self, phi: PhiGrid) -> np.ndarray:
        """Interpolate phi in u to the quadrature points v/lambda."""
        re = PchipInterpolator(self.u, phi.values.real, axis=1, extrapolate=False)
        im = PchipInterpolator(self.u, phi.values.imag, axis=1, extrapolate=False)
        return re(self.p_eval) + 1j * im(self.p_eval)

    def decayed_integrand(self, phi: PhiGrid) -> np.ndarray:
        """Return g(y, v) = exp(lam (phi(y, v/lam) - d_f(y)) + i v z).

        The grouped exponent stays bounded by exp(-eta v) for valid states,
        which keeps large-lam evaluation overflow-free.
        """
        phi_v = self.interp_at_v(phi)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.cfg.lam * (phi_v - self.d_f[:, None]) + self.vz[None, :])

    def step(self, phi: PhiGrid) -> PhiGrid:
        g = self.decayed_integrand(phi)
        with np.errstate(invalid="ignore"):
            inner = g @ self.kmat.T
            new_vals = self.d_f[:, None] - (self.fmat * self.mu.probs[None, :]) @ inner
        return PhiGrid(
            y_nodes=self.y,
            u_nodes=self.u,
            values=new_vals,
            z=complex(self.cfg.z),
            lam=self.cfg.lam,
            extrapolation_count=self.clamped,
        )


def apply_F(
    phi: PhiGrid,
    kernel: Kernel,
    mu: WeightModel,
    cfg: SolverConfig | None = None,
) -> PhiGrid:
    """Apply the fixed-point map once to a state grid."""
    if cfg is None:
        cfg = default_solver_config(phi.z, phi.lam, n_u=phi.u_nodes.size)
    if cfg.v_max / cfg.lam > phi.u_nodes[-1] * (1.0 + _EXTRAP_SLACK):
        raise ConfigError(
            f"V_max/lambda = {cfg.v_max / cfg.lam:.6g} exceeds the grid's "
            f"U_max = {phi.u_nodes[-1]:.6g}; enlarge U_max"
        )
    ws = _Workspace(cfg, kernel, mu)
    if phi.u_nodes.size != ws.u.size or not np.allclose(phi.u_nodes, ws.u):
        ws.u = phi.u_nodes
        arg = 2.0 * np.sqrt(np.outer(ws.u, ws.v))
        ws.kmat = (
            np.sqrt(ws.u)[:, None] * bessel_j1_array(arg) / np.sqrt(ws.v)[None, :]
        ) * ws.vw[None, :]
        ws.p_eval = np.minimum(ws.p_targets, ws.u[-1])
    return ws.step(phi)


def solve_fixed_point(
    cfg: SolverConfig,
    kernel: Kernel,
    mu: WeightModel,
    phi0: PhiGrid | None = None,
) -> PhiGrid:
    """Iterate the map from phi0 (default: the constant d_f state) until the
    weighted norm of successive differences drops below cfg.tol; re-verify the
    residual before returning."""
    ws = _Workspace(cfg, kernel, mu)
    phi = ws.initial_grid()
    if phi0 is not None:
        if phi0.values.shape != phi.values.shape or not np.allclose(phi0.u_nodes, phi.u_nodes):
            raise ConfigError("warm-start grid does not match the solver grid")
        phi = replace(phi, values=phi0.values)
    prev_diff = None
    stall = 0
    diff = math.inf
    for it in range(1, cfg.max_iter + 1):
        nxt = ws.step(phi)
        if not np.all(np.isfinite(nxt.values.view(float))):
            raise ConvergenceError(
                f"iteration diverged at z = {cfg.z} after {it} steps; increase Im z"
            )
        diff = weighted_sup_norm(nxt, phi)
        phi = nxt
        if diff < cfg.tol:
            verify = weighted_sup_norm(ws.step(phi), phi)
            return replace(
                phi,
                residual=verify,
                iterations=it,
                extrapolation_count=ws.clamped,
            )
        if prev_diff is not None and prev_diff > 0 and diff / prev_diff >= 0.99:
            stall += 1
            if stall >= 10:
                raise ConvergenceError(
                    f"no contraction at z = {cfg.z} (diff ratio >= 0.99 for 10 steps, "
                    f"last diff {diff:.3e}); increase Im z"
                )
        else:
            stall = 0
        prev_diff = diff
    raise ConvergenceError(
        f"fixed point not reached in {cfg.max_iter} iterations; residual {diff:.3e}"
    )


def _solved_state(
    cfg: SolverConfig, kernel: Kernel, mu: WeightModel, phi: PhiGrid | None
) -> tuple[_Workspace, PhiGrid]:
    if phi is None:
        phi = solve_fixed_point(cfg, kernel, mu)
    ws = _Workspace(cfg, kernel, mu)
    return ws, phi


def stieltjes_sparse(
    cfg: SolverConfig,
    kernel: Kernel,
    mu: WeightModel,
    phi: PhiGrid | None = None,
) -> complex:
    """Return the sparse limiting Stieltjes transform at cfg.z."""
    ws, phi = _solved_state(cfg, kernel, mu, phi)
    g = ws.decayed_integrand(phi)
    per_y = g @ ws.vw
    return 1j * complex(np.dot(ws.mu.probs, per_y))


def limit_GN(
    cfg: SolverConfig,
    kernel: Kernel,
    mu: WeightModel,
    u: float,
    phi: PhiGrid | None = None,
) -> complex:
    """Return the limiting characteristic-resolvent average at height u."""
    if not 0.0 <= u <= 1.0:
        raise ConfigError("u must lie in [0, 1]")
    if u == 0.0:
        return 1.0 + 0.0j
    ws, phi = _solved_state(cfg, kernel, mu, phi)
    g = ws.decayed_integrand(phi)
    row = math.sqrt(u) * bessel_j1_array(2.0 * np.sqrt(u * ws.v)) / np.sqrt(ws.v) * ws.vw
    per_y = g @ row
    return 1.0 - complex(np.dot(ws.mu.probs, per_y))


def verify_exponential_identity(u: float, z: complex) -> float:
    """Return the quadrature residual of the Bessel integral identity for
    exp(i u z)."""
    z = complex(z)
    if u < 0:
        raise ConfigError("u must be nonnegative")
    if z.imag <= 0:
        raise ConfigError("identity requires Im z > 0")
    if u == 0:
        return 0.0
    decay = z.imag / abs(z) ** 2
    v_max = 30.0 / decay
    osc = abs((-1.0 / z).real)
    phase = v_max * osc + 2.0 * math.sqrt(u * v_max)
    n_v = max(512, 16 * math.ceil(8.0 * phase / (2.0 * np.pi) / 16.0))
    v, w = _composite_gl(0.0, v_max, min(n_v, 16384))
    integrand = bessel_j1_array(2.0 * np.sqrt(u * v)) / np.sqrt(v) * np.exp(-1j * v / z)
    rhs = 1.0 - math.sqrt(u) * complex(np.dot(w, integrand))
    lhs = np.exp(1j * u * z)
    return float(abs(lhs - rhs))


def stieltjes_dense(
    z: complex,
    kernel: Kernel,
    mu: WeightModel,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> tuple[complex, np.ndarray]:
    """Solve the dense-limit resolvent equation and return (transform, H table).

    Damped iteration (step 0.5) from H = -1/z; for small Im z the solver
    continues analytically by stepping the imaginary part down from 1.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ConfigError("dense transform requires Im z > 0")
    fm = eval_kernel_grid(kernel, mu.atoms, mu.atoms) * mu.probs[None, :]
    etas = [z.imag]
    while etas[-1] < 1.0:
        etas.append(min(1.0, etas[-1] * 2.0))
    etas.reverse()
    h = np.full(mu.atoms.size, -1.0 / complex(z.real, etas[0]))
    for eta in etas:
        zz = complex(z.real, eta)
        for _ in range(max_iter):
            update = -1.0 / (zz + fm @ h)
            gap = float(np.abs(update - h).max())
            h = 0.5 * h + 0.5 * update
            if gap < tol:
                break
            if not np.all(np.isfinite(h.view(float))):
                raise ConvergenceError(
                    f"dense iteration diverged at Im z = {eta}; increase Im z"
                )
        else:
            raise ConvergenceError(
                f"dense iteration did not reach {tol} at Im z = {eta} "
                f"in {max_iter} steps; increase Im z"
            )
    return complex(np.dot(mu.probs, h)), h


def density_from_stieltjes(transform, x_grid: np.ndarray, eta_small: float) -> np.ndarray:
    """Return (1/pi) Im transform(x + i eta) over the grid."""
    if eta_small <= 0:
        raise ConfigError("eta_small must be positive")
    x_grid = np.asarray(x_grid, dtype=float)
    return np.array(
        [complex(transform(complex(x, eta_small))).imag / np.pi for x in x_grid]
    )
