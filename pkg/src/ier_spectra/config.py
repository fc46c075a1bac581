"""JSON experiment configuration: one schema shared by every subcommand,
parsed fail-fast with unknown keys rejected."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os

import numpy as np

from .errors import ConfigError
from .kernels import Kernel, WeightModel

UNARY_FUNCTIONS = {
    "identity": lambda x: x,
    "x_over_one_plus_x": lambda x: x / (1.0 + x),
}

_TOP_LEVEL_KEYS = {
    "kernel",
    "weights",
    "ensemble",
    "ensemble_b",
    "partitions",
    "moments",
    "spectrum",
    "stieltjes",
    "density",
    "figure",
}

_SECTION_KEYS = {
    "kernel": {"variant", "c", "function", "functions", "bound", "bounds",
               "lipschitz", "support_max", "path", "c_f", "c_l"},
    "weights": {"variant", "atoms", "probs", "resolution", "values"},
    "ensemble": {"variant", "n", "lambda", "eps", "degrees", "zero_diagonal"},
    "partitions": {"k", "family"},
    "moments": {"k_max", "lambda"},
    "spectrum": {"scale", "bins", "moment_orders"},
    "stieltjes": {"route", "z", "lambda", "n_u", "n_v", "tol", "max_iter"},
    "density": {"route", "eta", "x_min", "x_max", "n_x", "lambda"},
    "figure": {"name"},
}


def _check_keys(section: str, d: dict, allowed: set[str]) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"section {section!r} must be a JSON object")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section {section!r}; "
            f"allowed: {sorted(allowed)}"
        )


def load_config(path: str) -> dict:
    """Read and structurally validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    _check_keys("<top level>", cfg, _TOP_LEVEL_KEYS)
    for name, sub in cfg.items():
        lookup = "ensemble" if name == "ensemble_b" else name
        _check_keys(name, sub, _SECTION_KEYS[lookup])
    cfg["_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def config_hash(cfg: dict) -> str:
    """Return the sha256 hex digest of the canonical JSON form."""
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _require(section: str, d: dict, key: str):
    if key not in d:
        raise ConfigError(f"section {section!r} requires key {key!r}")
    return d[key]


def _named_function(name: str):
    if name not in UNARY_FUNCTIONS:
        raise ConfigError(
            f"unknown function {name!r}; known: {sorted(UNARY_FUNCTIONS)}"
        )
    return UNARY_FUNCTIONS[name]


def _load_kernel_table(path: str, base_dir: str) -> tuple[np.ndarray, np.ndarray]:
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    try:
        with open(full, "r", encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ConfigError(f"cannot read kernel table {full}: {exc}") from exc
    try:
        grid = np.array([float(x) for x in rows[0]])
        table = np.array([[float(x) for x in row] for row in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"kernel table {full} has non-numeric entries") from exc
    return grid, table


def parse_kernel(d: dict, base_dir: str = ".") -> Kernel:
    """Build a Kernel from its config section."""
    variant = _require("kernel", d, "variant")
    if variant == "constant":
        return Kernel.constant(float(d.get("c", 1.0)))
    if variant == "rank1":
        fn = _named_function(_require("kernel", d, "function"))
        return Kernel.rank1(
            fn,
            r_bound=float(_require("kernel", d, "bound")),
            r_lipschitz=float(d.get("lipschitz", 0.0)),
        )
    if variant == "finite_rank":
        names = _require("kernel", d, "functions")
        bounds = [float(b) for b in _require("kernel", d, "bounds")]
        lips = [float(v) for v in d.get("lipschitz", [0.0] * len(names))]
        return Kernel.finite_rank([_named_function(n) for n in names], bounds, lips)
    if variant in ("chung_lu", "grg", "norros_riettu"):
        factory = getattr(Kernel, variant)
        return factory(support_max=float(d.get("support_max", 1.0)))
    if variant == "tabulated":
        grid, table = _load_kernel_table(_require("kernel", d, "path"), base_dir)
        kwargs = {}
        if "c_f" in d:
            kwargs["c_f"] = float(d["c_f"])
        if "c_l" in d:
            kwargs["c_l"] = float(d["c_l"])
        return Kernel.tabulated(grid, table, **kwargs)
    raise ConfigError(f"unknown kernel variant {variant!r}")


def parse_weights(d: dict) -> WeightModel:
    """Build a WeightModel from its config section."""
    variant = _require("weights", d, "variant")
    if variant == "discrete":
        return WeightModel.discrete(
            _require("weights", d, "atoms"), _require("weights", d, "probs")
        )
    if variant == "uniform01":
        return WeightModel.uniform01(resolution=int(d.get("resolution", 64)))
    if variant == "empirical":
        return WeightModel.empirical(_require("weights", d, "values"))
    raise ConfigError(f"unknown weights variant {variant!r}")


def parse_lambda(value) -> float:
    """Accept a positive number or the string 'inf'."""
    if value == "inf":
        return math.inf
    try:
        lam = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"lambda must be a number or 'inf', got {value!r}") from exc
    return lam


def make_ensemble(section: dict, kernel: Kernel, weights: WeightModel, seed: int):
    """Build an EnsembleConfig from the config section plus a run seed."""
    from .ensembles import DEGREE_VARIANTS, EnsembleConfig

    variant = _require("ensemble", section, "variant")
    n = int(_require("ensemble", section, "n"))
    kwargs = {
        "n": n,
        "kernel": kernel,
        "weights": weights,
        "variant": variant,
        "seed": seed,
        "zero_diagonal": bool(section.get("zero_diagonal", False)),
    }
    if "lambda" in section:
        kwargs["lam"] = parse_lambda(section["lambda"])
    if "eps" in section:
        kwargs["eps"] = float(section["eps"])
    if "degrees" in section:
        degrees = section["degrees"]
        if degrees != "default":
            kwargs["degrees"] = [int(x) for x in degrees]
    elif variant in DEGREE_VARIANTS:
        pass
    return EnsembleConfig(**kwargs)
