"""Configuration-driven experiment runner tying the library together.

Exit codes: 0 success, 2 config error, 3 convergence error, 4 resource cap.
Output files embed the config hash and seed; reruns with identical inputs
produce byte-identical CSV bodies. The N = 10000 figure jobs hold one dense
double-precision matrix (~800 MB) at a time.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import (
    UNARY_FUNCTIONS,
    config_hash,
    load_config,
    make_ensemble,
    parse_kernel,
    parse_lambda,
    parse_weights,
)
from .ensembles import coupled_sample, realized_sparsity, sample_adjacency, scale_factor, scale_matrix
from .errors import ConfigError, ConvergenceError, ResourceError
from .kernels import Kernel, WeightModel, eval_kernel_grid
from .moments import limiting_moment, nc2_split
from .partitions import (
    enumerate_nc2,
    enumerate_set_partitions,
    enumerate_ss,
    is_noncrossing_pairing,
    is_special_symmetric,
    to_block_notation,
)
from .spectra import (
    build_spectral_report,
    empirical_moment,
    hw_bound_adjacency,
    levy_distance,
)
from .stieltjes import (
    default_solver_config,
    solve_fixed_point,
    stieltjes_dense,
    stieltjes_sparse,
)

FIGURE_NAMES = ("errg_lam5", "errg_lam10", "cl_grg_nr", "irg_lam5", "irg_lam10")


def _fmt(x) -> str:
    # repr gives the shortest round-trip decimal form
    return repr(float(x))


def _stamp(cfg_hash: str, seed: int) -> str:
    return f"# config_sha256={cfg_hash} seed={seed}"


def _write_csv(path: str, stamp: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(stamp + "\n")
        fh.write(header + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ConfigError(f"this command requires a {name!r} section in the config")
    return cfg[name]


def _model(cfg: dict) -> tuple[Kernel, WeightModel]:
    kernel = parse_kernel(_section(cfg, "kernel"), cfg.get("_dir", "."))
    weights = parse_weights(_section(cfg, "weights"))
    return kernel, weights


def _worker_count(requested: int) -> int:
    cap = os.environ.get("IER_SPECTRA_THREADS")
    if cap is not None:
        try:
            cap_n = int(cap)
        except ValueError as exc:
            raise ConfigError(f"IER_SPECTRA_THREADS must be an integer, got {cap!r}") from exc
        if cap_n < 1:
            raise ConfigError("IER_SPECTRA_THREADS must be >= 1")
        return max(1, min(requested, cap_n))
    return max(1, requested)


def cmd_partitions(cfg: dict, out_dir: str, seed: int) -> None:
    sec = _section(cfg, "partitions")
    k = int(sec.get("k", 0))
    family = sec.get("family", "all")
    if family == "all":
        parts = enumerate_set_partitions(k)
    elif family == "ss":
        parts = enumerate_ss(k)
    elif family == "nc2":
        parts = enumerate_nc2(k)
    else:
        raise ConfigError(f"unknown partition family {family!r}, expected all|ss|nc2")
    h = config_hash(cfg)
    rows = []
    for idx, p in enumerate(parts):
        rows.append(
            (
                str(idx),
                to_block_notation(p),
                str(len(p.blocks)),
                str(int(is_special_symmetric(p))),
                str(int(is_noncrossing_pairing(p))),
            )
        )
    _write_csv(
        os.path.join(out_dir, "partitions.csv"),
        _stamp(h, seed),
        "index,blocks,n_blocks,is_special_symmetric,is_noncrossing_pairing",
        rows,
    )


def cmd_moments(cfg: dict, out_dir: str, seed: int) -> None:
    kernel, weights = _model(cfg)
    sec = _section(cfg, "moments")
    k_max = int(sec.get("k_max", 8))
    lam = parse_lambda(sec.get("lambda", "inf"))
    h = config_hash(cfg)
    rows = []
    for k in range(0, k_max + 1):
        report = limiting_moment(k, lam, kernel, weights)
        nc2_part, remainder = nc2_split(report)
        rows.append((str(k), _fmt(lam), _fmt(report.value), _fmt(nc2_part), _fmt(remainder)))
    _write_csv(
        os.path.join(out_dir, "moments.csv"),
        _stamp(h, seed),
        "k,lambda,value,nc2_part,remainder",
        rows,
    )


def cmd_sample(cfg: dict, out_dir: str, seed: int) -> None:
    kernel, weights = _model(cfg)
    ens = make_ensemble(_section(cfg, "ensemble"), kernel, weights, seed)
    adj = sample_adjacency(ens)
    h = config_hash(cfg)
    pairs = [(int(i), int(i)) for i in adj.loops]
    pairs += [(int(i), int(j)) for i, j in adj.edges]
    pairs.sort()
    _write_csv(
        os.path.join(out_dir, "edges.csv"),
        _stamp(h, seed),
        "i,j",
        ((str(i), str(j)) for i, j in pairs),
    )
    eps, lam = realized_sparsity(ens)
    _write_json(
        os.path.join(out_dir, "sample.json"),
        {
            "config_sha256": h,
            "seed": seed,
            "n": ens.n,
            "variant": ens.variant,
            "eps": eps,
            "n_eps": lam,
            "edge_count": adj.edge_count(),
            "loop_count": int(adj.loops.size),
        },
    )


def cmd_spectrum(cfg: dict, out_dir: str, seed: int) -> None:
    kernel, weights = _model(cfg)
    ens = make_ensemble(_section(cfg, "ensemble"), kernel, weights, seed)
    sec = cfg.get("spectrum", {})
    mode = sec.get("scale", "sparse")
    bins = sec.get("bins", "fd")
    if not isinstance(bins, str):
        bins = int(bins)
    orders = tuple(int(k) for k in sec.get("moment_orders", (0, 1, 2, 3, 4, 5, 6)))
    adj = sample_adjacency(ens)
    m = scale_matrix(adj, ens, mode=mode)
    h = config_hash(cfg)
    report = build_spectral_report(
        m, config_hash=h, seed=seed, scale=scale_factor(ens, mode), moment_orders=orders, bins=bins
    )
    _write_csv(
        os.path.join(out_dir, "eigenvalues.csv"),
        _stamp(h, seed),
        "eigenvalue",
        ((_fmt(v),) for v in report.eigenvalues),
    )
    _write_csv(
        os.path.join(out_dir, "histogram.csv"),
        _stamp(h, seed),
        "bin_left,bin_right,count",
        (
            (_fmt(report.bin_edges[b]), _fmt(report.bin_edges[b + 1]), str(int(c)))
            for b, c in enumerate(report.bin_counts)
        ),
    )
    _write_json(
        os.path.join(out_dir, "report.json"),
        {
            "config_sha256": h,
            "seed": seed,
            "n": ens.n,
            "scale_mode": mode,
            "scale": report.scale,
            "moments": {str(k): v for k, v in report.moments.items()},
            "eigenvalue_min": float(report.eigenvalues.min()),
            "eigenvalue_max": float(report.eigenvalues.max()),
        },
    )


def _solver_overrides(sec: dict) -> dict:
    out = {}
    if "n_u" in sec:
        out["n_u"] = int(sec["n_u"])
    if "n_v" in sec:
        out["n_v"] = int(sec["n_v"])
    if "tol" in sec:
        out["tol"] = float(sec["tol"])
    if "max_iter" in sec:
        out["max_iter"] = int(sec["max_iter"])
    return out


def _parse_z(raw) -> complex:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError("z must be a [real, imag] pair")
    return complex(float(raw[0]), float(raw[1]))


def cmd_stieltjes(cfg: dict, out_dir: str, seed: int) -> None:
    kernel, weights = _model(cfg)
    sec = _section(cfg, "stieltjes")
    route = sec.get("route", "sparse")
    z = _parse_z(_require_key(sec, "stieltjes", "z"))
    h = config_hash(cfg)
    payload: dict = {"config_sha256": h, "seed": seed, "route": route, "z": [z.real, z.imag]}
    if route == "sparse":
        lam = parse_lambda(_require_key(sec, "stieltjes", "lambda"))
        solver = default_solver_config(z, lam, **_solver_overrides(sec))
        phi = solve_fixed_point(solver, kernel, weights)
        value = stieltjes_sparse(solver, kernel, weights, phi=phi)
        payload.update(
            {
                "lambda": lam,
                "value": [value.real, value.imag],
                "iterations": phi.iterations,
                "residual": phi.residual,
                "extrapolation_count": phi.extrapolation_count,
            }
        )
    elif route == "dense":
        value, _ = stieltjes_dense(z, kernel, weights)
        payload["value"] = [value.real, value.imag]
    else:
        raise ConfigError(f"unknown stieltjes route {route!r}, expected sparse|dense")
    _write_json(os.path.join(out_dir, "stieltjes.json"), payload)


def _require_key(sec: dict, name: str, key: str):
    if key not in sec:
        raise ConfigError(f"section {name!r} requires key {key!r}")
    return sec[key]


def sparse_density_curve(
    kernel: Kernel,
    weights: WeightModel,
    lam: float,
    x_grid: np.ndarray,
    eta: float,
    n_u: int = 256,
) -> np.ndarray:
    """Fixed-point density along a grid, warm-starting each solve from its
    neighbor (the state varies smoothly in Re z)."""
    out = np.empty(x_grid.size)
    phi_prev = None
    for idx, x in enumerate(x_grid):
        solver = default_solver_config(complex(x, eta), lam, n_u=n_u, max_iter=2000)
        phi = solve_fixed_point(solver, kernel, weights, phi0=phi_prev)
        value = stieltjes_sparse(solver, kernel, weights, phi=phi)
        out[idx] = value.imag / math.pi
        phi_prev = phi
    return out


def cmd_density(cfg: dict, out_dir: str, seed: int) -> None:
    kernel, weights = _model(cfg)
    sec = _section(cfg, "density")
    route = sec.get("route", "dense")
    eta = float(sec.get("eta", 0.05))
    x_min = float(sec.get("x_min", -3.0))
    x_max = float(sec.get("x_max", 3.0))
    n_x = int(sec.get("n_x", 121))
    if n_x < 2 or x_max <= x_min:
        raise ConfigError("density grid needs n_x >= 2 and x_max > x_min")
    x_grid = np.linspace(x_min, x_max, n_x)
    if route == "dense":
        dens = np.array(
            [stieltjes_dense(complex(x, eta), kernel, weights)[0].imag / math.pi for x in x_grid]
        )
    elif route == "sparse":
        lam = parse_lambda(_require_key(sec, "density", "lambda"))
        dens = sparse_density_curve(kernel, weights, lam, x_grid, eta)
    else:
        raise ConfigError(f"unknown density route {route!r}, expected sparse|dense")
    h = config_hash(cfg)
    _write_csv(
        os.path.join(out_dir, "density.csv"),
        _stamp(h, seed),
        "x,density",
        ((_fmt(x), _fmt(d)) for x, d in zip(x_grid, dens)),
    )
    _write_json(
        os.path.join(out_dir, "density.json"),
        {
            "config_sha256": h,
            "seed": seed,
            "route": route,
            "eta": eta,
            "n_x": n_x,
            "mass": float(np.trapezoid(dens, x_grid)),
        },
    )


def _compare_one(cfg: dict, seed: int) -> dict:
    kernel, weights = _model(cfg)
    ens_a = make_ensemble(_section(cfg, "ensemble"), kernel, weights, seed)
    ens_b = make_ensemble(_section(cfg, "ensemble_b"), kernel, weights, seed)
    if ens_a.n != ens_b.n:
        raise ConfigError(f"compare requires matching N, got {ens_a.n} and {ens_b.n}")
    adj_a, adj_b = coupled_sample(ens_a, ens_b, seed)
    sa = scale_factor(ens_a, "sparse")
    sb = scale_factor(ens_b, "sparse")
    eig_a = build_spectral_report(scale_matrix(adj_a, ens_a, "sparse"))
    eig_b = build_spectral_report(scale_matrix(adj_b, ens_b, "sparse"))
    levy = levy_distance(eig_a, eig_b)
    hw = hw_bound_adjacency(adj_a, adj_b, 1.0 / sa, 1.0 / sb)
    return {
        "seed": seed,
        "levy": levy,
        "hw_bound": hw,
        "violation": bool(levy**3 > hw + 1e-12),
    }


def cmd_compare(cfg: dict, out_dir: str, seeds: list[int], workers: int) -> None:
    _section(cfg, "ensemble")
    _section(cfg, "ensemble_b")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(lambda s: _compare_one(cfg, s), seeds))
    else:
        per_seed = [_compare_one(cfg, s) for s in seeds]
    per_seed.sort(key=lambda r: r["seed"])
    h = config_hash(cfg)
    _write_json(
        os.path.join(out_dir, "compare.json"),
        {
            "config_sha256": h,
            "seeds": seeds,
            "per_seed": per_seed,
            "mean_levy": float(np.mean([r["levy"] for r in per_seed])),
            "mean_hw_bound": float(np.mean([r["hw_bound"] for r in per_seed])),
            "violations": int(sum(r["violation"] for r in per_seed)),
        },
    )


def _figure_overlay(
    kernel: Kernel,
    weights: WeightModel,
    lam: float,
    out_dir: str,
    stamp: str,
) -> None:
    x_grid = np.linspace(-3.2, 3.2, 129)
    dens = sparse_density_curve(kernel, weights, lam, x_grid, 0.1)
    _write_csv(
        os.path.join(out_dir, "density_overlay.csv"),
        stamp,
        "x,density",
        ((_fmt(x), _fmt(d)) for x, d in zip(x_grid, dens)),
    )


def _figure_histogram(report, path: str, stamp: str) -> None:
    _write_csv(
        path,
        stamp,
        "bin_left,bin_right,count",
        (
            (_fmt(report.bin_edges[b]), _fmt(report.bin_edges[b + 1]), str(int(c)))
            for b, c in enumerate(report.bin_counts)
        ),
    )


def run_figure(name: str, out_dir: str = ".", seed: int = 0, cfg_hash: str = "") -> dict:
    """Run one named batch job at N = 10000: sample, eigendecompose, histogram,
    and overlay the fixed-point density. Holds one ~800 MB dense matrix at a
    time."""
    if name not in FIGURE_NAMES:
        raise ConfigError(f"unknown figure {name!r}, expected one of {FIGURE_NAMES}")
    n = 10_000
    stamp = _stamp(cfg_hash, seed)
    stats: dict = {"config_sha256": cfg_hash, "seed": seed, "name": name, "n": n}

    if name.startswith("errg"):
        lam = 5.0 if name.endswith("5") else 10.0
        kernel = Kernel.constant(1.0)
        weights = WeightModel.discrete([1.0], [1.0])
        ens = make_ensemble(
            {"variant": "homogeneous", "n": n, "lambda": lam}, kernel, weights, seed
        )
        adj = sample_adjacency(ens)
        report = build_spectral_report(scale_matrix(adj, ens, "sparse"), cfg_hash, seed)
        _figure_histogram(report, os.path.join(out_dir, "histogram.csv"), stamp)
        stats.update(
            {
                "lambda": lam,
                "moment_k4": empirical_moment(report, 4),
                "expected_k4": 2.0 + 1.0 / lam,
            }
        )
        _figure_overlay(kernel, weights, lam, out_dir, stamp)
    elif name.startswith("irg"):
        lam = 5.0 if name.endswith("5") else 10.0
        kernel = Kernel.finite_rank(
            [UNARY_FUNCTIONS["x_over_one_plus_x"], UNARY_FUNCTIONS["identity"]],
            [1.0, 1.0],
            [1.0, 1.0],
        )
        weights = WeightModel.uniform01(resolution=32)
        ens = make_ensemble(
            {"variant": "generic_ier", "n": n, "lambda": lam}, kernel, weights, seed
        )
        adj = sample_adjacency(ens)
        report = build_spectral_report(scale_matrix(adj, ens, "sparse"), cfg_hash, seed)
        _figure_histogram(report, os.path.join(out_dir, "histogram.csv"), stamp)
        fgrid = eval_kernel_grid(kernel, weights.atoms, weights.atoms)
        mean_f = float(weights.probs @ fgrid @ weights.probs)
        stats.update(
            {
                "lambda": lam,
                "moment_k2": empirical_moment(report, 2),
                "expected_k2": mean_f,
            }
        )
        _figure_overlay(kernel, weights, lam, out_dir, stamp)
    else:
        kernel = Kernel.constant(1.0)
        weights = WeightModel.discrete([1.0], [1.0])
        reports = {}
        adjs = {}
        scales = {}
        for variant in ("chung_lu", "grg", "norros_riettu"):
            ens = make_ensemble({"variant": variant, "n": n}, kernel, weights, seed)
            adj = sample_adjacency(ens)
            adjs[variant] = adj
            scales[variant] = scale_factor(ens, "sparse")
            report = build_spectral_report(scale_matrix(adj, ens, "sparse"), cfg_hash, seed)
            reports[variant] = report
            _figure_histogram(
                report, os.path.join(out_dir, f"histogram_{variant}.csv"), stamp
            )
        pairs = {}
        names = ("chung_lu", "grg", "norros_riettu")
        for a in range(3):
            for b in range(a + 1, 3):
                va, vb = names[a], names[b]
                pairs[f"{va}_vs_{vb}"] = {
                    "levy": levy_distance(reports[va], reports[vb]),
                    "hw_bound": hw_bound_adjacency(
                        adjs[va], adjs[vb], 1.0 / scales[va], 1.0 / scales[vb]
                    ),
                }
        stats["pairwise"] = pairs
        overlay_kernel = Kernel.rank1(lambda x: x / 5.0, r_bound=1.0, r_lipschitz=0.2)
        overlay_weights = WeightModel.discrete(
            [1.0, 2.0, 3.0, 4.0, 5.0], [0.2, 0.2, 0.2, 0.2, 0.2]
        )
        _figure_overlay(overlay_kernel, overlay_weights, 25.0 / 3.0, out_dir, stamp)
    _write_json(os.path.join(out_dir, "figure.json"), stats)
    return stats


def cmd_figure(cfg: dict, out_dir: str, seed: int) -> None:
    sec = _section(cfg, "figure")
    run_figure(str(_require_key(sec, "figure", "name")), out_dir, seed, config_hash(cfg))


def _parse_seeds(raw: str) -> list[int]:
    try:
        seeds = [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {raw!r}") from exc
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ier-spectra",
        description="Spectral experiments for sparse inhomogeneous random graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "partitions",
        "moments",
        "sample",
        "spectrum",
        "stieltjes",
        "density",
        "compare",
        "figure",
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="top-level seed")
        p.add_argument("--seeds", default=None, help="comma-separated seeds (compare)")
        p.add_argument("--workers", type=int, default=1, help="seed-level worker cap")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = args.out
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")
        if args.command == "partitions":
            cmd_partitions(cfg, out_dir, args.seed)
        elif args.command == "moments":
            cmd_moments(cfg, out_dir, args.seed)
        elif args.command == "sample":
            cmd_sample(cfg, out_dir, args.seed)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, out_dir, args.seed)
        elif args.command == "stieltjes":
            cmd_stieltjes(cfg, out_dir, args.seed)
        elif args.command == "density":
            cmd_density(cfg, out_dir, args.seed)
        elif args.command == "compare":
            seeds = _parse_seeds(args.seeds) if args.seeds else [args.seed]
            cmd_compare(cfg, out_dir, seeds, _worker_count(args.workers))
        elif args.command == "figure":
            cmd_figure(cfg, out_dir, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
