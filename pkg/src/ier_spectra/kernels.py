"""Connectivity kernels f(x, y), weight laws, degree functions, and
homomorphism densities of small graphs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, ResourceError
from .partitions import PartitionGraph

MAX_HOM_VERTICES = 8
MAX_TENSOR_ENTRIES = 10**7

UnaryFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Kernel:
    """A symmetric connectivity function on [0, inf)^2 with declared bounds.

    c_f bounds the values, c_l bounds the Lipschitz constant in one
    coordinate over the intended weight support.
    """

    variant: str
    c_f: float
    c_l: float
    const: float = 1.0
    factors: tuple[UnaryFn, ...] = ()
    grid: np.ndarray | None = None
    table: np.ndarray | None = None

    @classmethod
    def constant(cls, c: float = 1.0) -> "Kernel":
        """Return the kernel f(x, y) = c."""
        if c < 0:
            raise ConfigError("constant kernel must be nonnegative")
        return cls(variant="constant", c_f=float(c), c_l=0.0, const=float(c))

    @classmethod
    def rank1(cls, r: UnaryFn, r_bound: float, r_lipschitz: float = 0.0) -> "Kernel":
        """Return f(x, y) = r(x) r(y) with sup |r| <= r_bound on the support."""
        return cls(
            variant="rank1",
            c_f=float(r_bound) ** 2,
            c_l=float(r_bound) * float(r_lipschitz),
            factors=(r,),
        )

    @classmethod
    def finite_rank(
        cls,
        rs: Sequence[UnaryFn],
        bounds: Sequence[float],
        lipschitz: Sequence[float] | None = None,
    ) -> "Kernel":
        """Return f(x, y) = sum_i r_i(x) r_i(y)."""
        if len(rs) != len(bounds):
            raise ConfigError("one bound per factor function is required")
        lip = list(lipschitz) if lipschitz is not None else [0.0] * len(rs)
        c_f = float(sum(b * b for b in bounds))
        c_l = float(sum(b * l for b, l in zip(bounds, lip)))
        return cls(variant="finite_rank", c_f=c_f, c_l=c_l, factors=tuple(rs))

    @classmethod
    def chung_lu(cls, support_max: float = 1.0) -> "Kernel":
        """Return f(x, y) = min(x y, 1)."""
        return cls(variant="chung_lu", c_f=1.0, c_l=float(support_max))

    @classmethod
    def grg(cls, support_max: float = 1.0) -> "Kernel":
        """Return f(x, y) = x y / (1 + x y)."""
        return cls(variant="grg", c_f=1.0, c_l=float(support_max))

    @classmethod
    def norros_riettu(cls, support_max: float = 1.0) -> "Kernel":
        """Return f(x, y) = 1 - exp(-x y)."""
        return cls(variant="norros_riettu", c_f=1.0, c_l=float(support_max))

    @classmethod
    def tabulated(
        cls,
        grid: Sequence[float],
        table: Sequence[Sequence[float]],
        c_f: float | None = None,
        c_l: float | None = None,
    ) -> "Kernel":
        """Return a bilinearly interpolated kernel on a square grid.

        The table is symmetrized by averaging with its transpose; evaluation
        outside the tabulated square is refused rather than extrapolated.
        """
        g = np.asarray(grid, dtype=float)
        t = np.asarray(table, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ConfigError("tabulated grid must be strictly increasing, length >= 2")
        if t.shape != (g.size, g.size):
            raise ConfigError("tabulated values must be a square matrix over the grid")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ConfigError("tabulated values must be finite and nonnegative")
        t = 0.5 * (t + t.T)
        return cls(
            variant="tabulated",
            c_f=float(t.max() if c_f is None else c_f),
            c_l=0.0 if c_l is None else float(c_l),
            grid=g,
            table=t,
        )


def _bilinear(kernel: Kernel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    g = kernel.grid
    t = kernel.table
    if np.any(x < g[0]) or np.any(x > g[-1]) or np.any(y < g[0]) or np.any(y > g[-1]):
        raise ConfigError(
            f"tabulated kernel defined only on [{g[0]}, {g[-1]}]^2"
        )
    ix = np.clip(np.searchsorted(g, x) - 1, 0, g.size - 2)
    iy = np.clip(np.searchsorted(g, y) - 1, 0, g.size - 2)
    fx = (x - g[ix]) / (g[ix + 1] - g[ix])
    fy = (y - g[iy]) / (g[iy + 1] - g[iy])
    return (
        t[ix, iy] * (1 - fx) * (1 - fy)
        + t[ix + 1, iy] * fx * (1 - fy)
        + t[ix, iy + 1] * (1 - fx) * fy
        + t[ix + 1, iy + 1] * fx * fy
    )


def _eval_xy(kernel: Kernel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the kernel on broadcastable nonnegative arrays."""
    if np.any(x < 0) or np.any(y < 0):
        raise ConfigError("kernel arguments must be nonnegative")
    if kernel.variant == "constant":
        return np.broadcast_to(kernel.const, np.broadcast_shapes(x.shape, y.shape)).copy()
    if kernel.variant in ("rank1", "finite_rank"):
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape))
        for r in kernel.factors:
            out += np.asarray(r(x)) * np.asarray(r(y))
        return out
    if kernel.variant == "chung_lu":
        return np.minimum(x * y, 1.0)
    if kernel.variant == "grg":
        xy = x * y
        return xy / (1.0 + xy)
    if kernel.variant == "norros_riettu":
        return -np.expm1(-(x * y))
    if kernel.variant == "tabulated":
        xb, yb = np.broadcast_arrays(x, y)
        return _bilinear(kernel, xb, yb)
    raise ConfigError(f"unknown kernel variant {kernel.variant!r}")


def eval_kernel(kernel: Kernel, x: float, y: float) -> float:
    """Return f(x, y) for scalar nonnegative arguments."""
    return float(_eval_xy(kernel, np.asarray(float(x)), np.asarray(float(y))))


def eval_kernel_grid(kernel: Kernel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return the matrix f(x_i, y_j)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _eval_xy(kernel, x[:, None], y[None, :])


@dataclass(frozen=True, eq=False)
class WeightModel:
    """A compactly supported weight law, reduced to nodes and masses.

    For empirical and discrete variants the nodes are the atoms and the
    representation is exact; for uniform01 the nodes are a fixed
    Gauss-Legendre rule on [0, 1].
    """

    variant: str
    atoms: np.ndarray
    probs: np.ndarray
    support_max: float
    resolution: int = 0

    def __post_init__(self) -> None:
        if np.any(self.probs < 0) or abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ConfigError("weight masses must be nonnegative and sum to 1")
        if np.any(self.atoms < 0) or not np.all(np.isfinite(self.atoms)):
            raise ConfigError("weights must be finite and nonnegative")

    @classmethod
    def empirical(cls, w: Sequence[float]) -> "WeightModel":
        """Return the empirical law of a finite weight vector."""
        arr = np.asarray(w, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("empirical weights must be a nonempty vector")
        probs = np.full(arr.size, 1.0 / arr.size)
        return cls("empirical", arr, probs, float(arr.max()))

    @classmethod
    def discrete(cls, atoms: Sequence[float], probs: Sequence[float]) -> "WeightModel":
        """Return a finitely supported law with the given masses."""
        a = np.asarray(atoms, dtype=float)
        p = np.asarray(probs, dtype=float)
        if a.shape != p.shape or a.ndim != 1 or a.size == 0:
            raise ConfigError("atoms and probs must be matching nonempty vectors")
        return cls("discrete", a, p, float(a.max()))

    @classmethod
    def uniform01(cls, resolution: int = 64) -> "WeightModel":
        """Return Unif[0, 1] as a fixed Gauss-Legendre rule."""
        if resolution < 2:
            raise ConfigError("uniform01 resolution must be >= 2")
        nodes, weights = np.polynomial.legendre.leggauss(resolution)
        x = 0.5 * (nodes + 1.0)
        p = 0.5 * weights
        return cls("uniform01", x, p / p.sum(), 1.0, resolution)


def draw_weights(mu: WeightModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n weights distributed as mu."""
    if mu.variant == "empirical":
        if n != mu.atoms.size:
            raise ConfigError(
                f"empirical weight vector has length {mu.atoms.size}, need {n}"
            )
        return mu.atoms.copy()
    if mu.variant == "discrete":
        return rng.choice(mu.atoms, size=n, p=mu.probs)
    if mu.variant == "uniform01":
        return rng.random(n)
    raise ConfigError(f"unknown weight variant {mu.variant!r}")


def mean_degree_function(kernel: Kernel, mu: WeightModel, y: float) -> float:
    """Return d_f(y), the mu-average of f(., y)."""
    col = _eval_xy(kernel, mu.atoms, np.asarray(float(y)))
    return float(col @ mu.probs)


def mean_degree_at_nodes(kernel: Kernel, mu: WeightModel, ys: np.ndarray) -> np.ndarray:
    """Return d_f evaluated at each entry of ys."""
    ys = np.asarray(ys, dtype=float)
    return eval_kernel_grid(kernel, mu.atoms, ys).T @ mu.probs


def homomorphism_density(h: PartitionGraph, kernel: Kernel, mu: WeightModel) -> float:
    """Return t(h) = integral of prod_{(a,b) in E(h)} f(w_a, w_b) over mu^v.

    Exact tensor-network contraction by greedy vertex elimination; refuses
    inputs whose intermediate tensors would exceed the entry cap.
    """
    v = len(h.vertices)
    if v > MAX_HOM_VERTICES:
        raise ResourceError(
            f"homomorphism density supports at most {MAX_HOM_VERTICES} vertices, got {v}"
        )
    n = mu.atoms.size
    if mu.variant in ("discrete", "empirical") and n**v > MAX_TENSOR_ENTRIES:
        raise ResourceError(
            f"|atoms|^v = {n}^{v} exceeds {MAX_TENSOR_ENTRIES}; "
            "use homomorphism_density_mc instead"
        )
    fmat = eval_kernel_grid(kernel, mu.atoms, mu.atoms)
    factors: list[tuple[tuple[int, ...], np.ndarray]] = []
    for a, b in sorted(h.edges):
        factors.append(((a, b), fmat))
    for a in sorted(h.self_loops):
        factors.append(((a,), np.diag(fmat).copy()))
    remaining = set(range(v))
    acc = 1.0
    while remaining:
        u = min(
            remaining,
            key=lambda cand: len(
                set().union(*(set(vs) for vs, _ in factors if cand in vs), {cand})
            ),
        )
        involved = [fac for fac in factors if u in fac[0]]
        factors = [fac for fac in factors if u not in fac[0]]
        cur_vars: tuple[int, ...] = (u,)
        cur = mu.probs
        for vs, tensor in involved:
            out_vars = tuple(sorted(set(cur_vars) | set(vs)))
            if n ** len(out_vars) > MAX_TENSOR_ENTRIES:
                raise ResourceError(
                    "intermediate tensor exceeds the entry cap; "
                    "use homomorphism_density_mc instead"
                )
            letters = {x: chr(ord("a") + i) for i, x in enumerate(out_vars)}
            sub = "{},{}->{}".format(
                "".join(letters[x] for x in cur_vars),
                "".join(letters[x] for x in vs),
                "".join(letters[x] for x in out_vars),
            )
            cur = np.einsum(sub, cur, tensor)
            cur_vars = out_vars
        axis = cur_vars.index(u)
        cur = cur.sum(axis=axis)
        cur_vars = tuple(x for x in cur_vars if x != u)
        if cur_vars:
            factors.append((cur_vars, cur))
        else:
            acc *= float(cur)
        remaining.discard(u)
    for vs, tensor in factors:
        raise ConfigError("internal: unconsumed factor in elimination")
    return acc


def homomorphism_density_mc(
    h: PartitionGraph,
    kernel: Kernel,
    mu: WeightModel,
    n_samples: int = 200_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Return a Monte Carlo estimate of t(h) and its standard error."""
    v = len(h.vertices)
    rng = np.random.default_rng(seed)
    draws = np.column_stack([draw_weights(mu, n_samples, rng) for _ in range(v)])
    prod = np.ones(n_samples)
    for a, b in sorted(h.edges):
        prod *= _eval_xy(kernel, draws[:, a], draws[:, b])
    for a in sorted(h.self_loops):
        prod *= _eval_xy(kernel, draws[:, a], draws[:, a])
    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / np.sqrt(n_samples))
    return mean, stderr


def spot_check_kernel(
    kernel: Kernel,
    mu: WeightModel,
    n_points: int = 10_000,
    seed: int = 0,
) -> None:
    """Sample points from mu and verify bound, symmetry, and Lipschitz
    declarations; raise ConfigError on violation."""
    rng = np.random.default_rng(seed)
    x = draw_weights(mu, n_points, rng) if mu.variant != "empirical" else rng.choice(
        mu.atoms, size=n_points
    )
    y = rng.permutation(x)
    vals = _eval_xy(kernel, x, y)
    if np.any(vals < -1e-12) or np.any(vals > kernel.c_f + 1e-12):
        raise ConfigError(
            f"kernel violates declared bound c_f={kernel.c_f}: "
            f"range [{vals.min()}, {vals.max()}]"
        )
    sym_gap = np.max(np.abs(vals - _eval_xy(kernel, y, x)))
    if sym_gap > 1e-12:
        raise ConfigError(f"kernel asymmetric: max gap {sym_gap}")
    if kernel.c_l > 0:
        x2 = rng.permutation(x)
        lhs = np.abs(vals - _eval_xy(kernel, x2, y))
        rhs = kernel.c_l * np.abs(x - x2) + 1e-9
        if np.any(lhs > rhs):
            raise ConfigError(f"kernel violates declared Lipschitz bound c_l={kernel.c_l}")
