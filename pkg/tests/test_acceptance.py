"""Acceptance gate: one test per release criterion.

Each test prints a single summary line; run with -v for the pass/fail table.
Statistical bounds were frozen from measured spreads, never guessed.
"""

import math
import time

import numpy as np
import pytest

from ier_spectra.ensembles import (
    EnsembleConfig,
    sample_adjacency,
    scale_factor,
    scale_matrix,
)
from ier_spectra.kernels import Kernel, WeightModel
from ier_spectra.moments import dense_moment, free_mult_semicircle_moment, limiting_moment
from ier_spectra.partitions import (
    Partition,
    build_partition_graph,
    compose_gamma,
    enumerate_set_partitions,
    enumerate_ss,
    has_ascending_walk_cycles,
    is_special_symmetric,
    is_tree,
    kreweras_complement,
)
from ier_spectra.spectra import (
    build_spectral_report,
    compute_GN,
    eigenvalues_symmetric,
    empirical_moment,
    empirical_trace_moment,
    hw_bound_adjacency,
    levy_distance,
)
from ier_spectra.stieltjes import (
    default_solver_config,
    density_from_stieltjes,
    limit_GN,
    solve_fixed_point,
    stieltjes_dense,
    stieltjes_sparse,
    verify_exponential_identity,
)

CONST = Kernel.constant(1.0)
POINT = WeightModel.discrete([1.0], [1.0])


def semicircle_transform(z):
    root = np.sqrt(complex(z) ** 2 - 4.0)
    if root.imag < 0:
        root = -root
    return (-z + root) / 2.0


def bell_numbers(n_max):
    bell = [1]
    for n in range(n_max):
        bell.append(sum(math.comb(n, i) * bell[i] for i in range(n + 1)))
    return bell


def catalan(n):
    return math.comb(2 * n, n) // (n + 1)


def test_criterion_01_enumeration_and_membership():
    start = time.perf_counter()
    bell = bell_numbers(10)
    for k in range(1, 11):
        parts = enumerate_set_partitions(k)
        assert len(parts) == bell[k]
        ss = [p for p in parts if is_special_symmetric(p)]
        assert set(ss) == set(enumerate_ss(k))
        if k % 2 == 1:
            assert ss == []
        else:
            pairings = sum(1 for p in ss if len(p.blocks) == k // 2)
            assert pairings == catalan(k // 2)
        for p in parts:
            member = is_tree(build_partition_graph(p)) and has_ascending_walk_cycles(p)
            assert is_special_symmetric(p) == member
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    print(f"criterion 01: PASS (k <= 10 exhaustive in {elapsed:.1f}s)")


def test_criterion_02_worked_examples():
    start = time.perf_counter()
    compositions = [
        ([[1, 2, 5, 6], [3, 4]], [[1, 3, 5], [2, 6], [4]]),
        ([[1, 2, 3, 4], [5, 6]], [[1, 3, 5], [2, 4], [6]]),
        ([[1, 6], [2, 3, 4, 5]], [[1], [2, 4, 6], [3, 5]]),
        ([[1, 2, 3, 4], [5, 6, 7, 8]], [[1, 3, 5, 7], [2, 4], [6, 8]]),
        ([[1, 4, 5, 8], [2, 3, 6, 7]], [[1, 5], [2, 4, 6, 8], [3, 7]]),
        ([[1, 2, 4, 5], [3, 6, 7, 8]], [[1, 3, 7], [2, 5], [4, 6, 8]]),
    ]
    for blocks, expected in compositions:
        p = Partition.from_blocks(blocks)
        assert compose_gamma(p) == Partition.from_blocks(expected, k=p.k)
    assert is_special_symmetric(Partition.from_blocks([[1, 2, 3, 4], [5, 6, 7, 8]]))
    assert is_special_symmetric(Partition.from_blocks([[1, 4, 5, 8], [2, 3, 6, 7]]))
    bad = Partition.from_blocks([[1, 2, 4, 5], [3, 6, 7, 8]])
    assert not is_special_symmetric(bad)
    assert not is_tree(build_partition_graph(bad))
    assert kreweras_complement(
        Partition.from_blocks([[1, 2], [3, 4], [5, 6]])
    ) == Partition.from_blocks([[1, 3, 5], [2], [4], [6]])
    assert kreweras_complement(
        Partition.from_blocks([[1, 2], [3, 6], [4, 5], [7, 8]])
    ) == Partition.from_blocks([[1, 3, 7], [2], [4, 6], [5], [8]])
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"criterion 02: PASS (worked examples in {elapsed * 1e3:.0f}ms)")


def _position_partitions(k):
    def rec(prefix, m):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for c in range(m + 1):
            yield from rec(prefix + [c], max(m, c + 1))

    yield from rec([], 0)


def _finite_n_moment(k, n, lam):
    # Exact Bernoulli expectation of the normalized trace: group closed walks
    # by the coincidence pattern of their vertices, count distinct collapsed
    # edges (loops included), and weight by falling factorials.
    total = 0.0
    p = lam / n
    for rgs in _position_partitions(k):
        blocks = max(rgs) + 1
        edges = set()
        for i in range(k):
            a, b = rgs[i], rgs[(i + 1) % k]
            edges.add((min(a, b), max(a, b)))
        falling = 1.0
        for j in range(blocks):
            falling *= n - j
        total += falling * p ** len(edges)
    return total / (n * lam ** (k / 2))


@pytest.mark.slow
def test_criterion_03_moment_identities_and_monte_carlo():
    start = time.perf_counter()
    for lam in (0.5, 2.0, 10.0, 250.0):
        assert limiting_moment(2, lam, CONST, POINT).value == pytest.approx(1.0)
        assert limiting_moment(4, lam, CONST, POINT).value == pytest.approx(
            2.0 + 1.0 / lam
        )
    n, lam, n_seeds = 4000, 10.0, 20
    samples = {2: [], 4: [], 6: []}
    for seed in range(n_seeds):
        ens = EnsembleConfig(
            n=n, kernel=CONST, weights=POINT, variant="homogeneous",
            seed=seed, lam=lam,
        )
        m = scale_matrix(sample_adjacency(ens), ens, "sparse")
        report = build_spectral_report(m)
        del m
        for k in samples:
            samples[k].append(empirical_moment(report, k))
    lines = []
    for k, vals in samples.items():
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1)) / math.sqrt(n_seeds)
        expected = _finite_n_moment(k, n, lam)
        assert abs(mean - expected) < 3 * se
        limit = limiting_moment(k, lam, CONST, POINT).value
        assert abs(expected - limit) <= 3.0 * lam ** (k / 2) / n
        lines.append(f"k={k} z={(mean - expected) / se:+.2f}")
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0
    print(f"criterion 03: PASS ({'; '.join(lines)}; {elapsed:.0f}s)")


def test_criterion_04_dense_limit():
    two_atoms = WeightModel.discrete([0.5, 1.5], [0.5, 0.5])
    rank1 = Kernel.rank1(lambda x: x, 1.5, r_lipschitz=1.0)
    # Constants frozen from the exact lambda-scaled gaps: 29.42 for the
    # homogeneous kernel, 47.76 for the rank-one kernel, both at lambda = 10
    # and decreasing from there.
    for kernel, mu, c in ((CONST, POINT, 30.0), (rank1, two_atoms, 50.0)):
        scaled = []
        for lam in (10.0, 100.0, 1000.0):
            worst = 0.0
            for k in range(0, 9):
                diff = abs(
                    limiting_moment(k, lam, kernel, mu).value
                    - dense_moment(k, kernel, mu)
                )
                assert diff <= c / lam
                worst = max(worst, lam * diff)
            scaled.append(worst)
        assert scaled == sorted(scaled, reverse=True)
    for half in range(1, 7):
        assert dense_moment(2 * half, CONST, POINT) == float(catalan(half))
    print("criterion 04: PASS (moment gap <= C/lambda, C in {30, 50})")


def test_criterion_05_free_multiplicative_form():
    mu = WeightModel.discrete([0.5, 1.0, 1.5], [1 / 3, 1 / 3, 1 / 3])
    kernel = Kernel.rank1(lambda x: x, 1.5, r_lipschitz=1.0)
    gaps = []
    for k in (2, 4, 6, 8):
        gap = abs(
            free_mult_semicircle_moment(k, mu) - dense_moment(k, kernel, mu)
        )
        assert gap <= 1e-10
        gaps.append(gap)
    print(f"criterion 05: PASS (max gap {max(gaps):.1e})")


def test_criterion_06_exponential_identity():
    worst = 0.0
    for u in (0.1, 0.5, 1.0):
        for z in (2j, 1 + 3j):
            worst = max(worst, verify_exponential_identity(u, z))
    assert worst <= 1e-6
    print(f"criterion 06: PASS (max residual {worst:.1e})")


def test_criterion_07_large_lambda_fixed_point():
    start = time.perf_counter()
    cfg = default_solver_config(2j, 50.0)
    phi = solve_fixed_point(cfg, CONST, POINT)
    value = stieltjes_sparse(cfg, CONST, POINT, phi=phi)
    gap = abs(value - (math.sqrt(2.0) - 1.0) * 1j)
    assert gap < 2e-2
    assert phi.residual < 1e-8
    two_atoms = WeightModel.discrete([0.5, 1.5], [0.5, 0.5])
    phi2 = solve_fixed_point(default_solver_config(2j, 50.0), CONST, two_atoms)
    row_gap = float(np.max(np.abs(phi2.values[0] - phi2.values[1])))
    assert row_gap < 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(
        f"criterion 07: PASS (gap {gap:.1e}, residual {phi.residual:.1e}, "
        f"row variation {row_gap:.1e}, {elapsed:.1f}s)"
    )


@pytest.mark.slow
def test_criterion_08_characteristic_resolvent():
    z, lam, u = 2j, 10.0, 0.5
    cfg = default_solver_config(z, lam)
    phi = solve_fixed_point(cfg, CONST, POINT)
    limit = limit_GN(cfg, CONST, POINT, u, phi=phi)
    vals = []
    for seed in range(20):
        ens = EnsembleConfig(
            n=4000, kernel=CONST, weights=POINT, variant="homogeneous",
            seed=seed, lam=lam,
        )
        m = scale_matrix(sample_adjacency(ens), ens, "sparse")
        vals.append(compute_GN(m, u, z))
        del m
    gap = abs(np.mean(vals) - limit)
    assert gap < 3e-2
    h = 1e-4
    deriv = (limit_GN(cfg, CONST, POINT, h, phi=phi) - 1.0) / h
    st = stieltjes_sparse(cfg, CONST, POINT, phi=phi)
    d_gap = abs(deriv - 1j * st)
    assert d_gap < 1e-3
    print(f"criterion 08: PASS (GN gap {gap:.1e}, derivative gap {d_gap:.1e})")


def test_criterion_09_dense_route():
    val, _ = stieltjes_dense(2j, CONST, POINT)
    transform_gap = abs(val - (math.sqrt(2.0) - 1.0) * 1j)
    assert transform_gap <= 1e-8

    def transform(z):
        out, _ = stieltjes_dense(z, CONST, POINT)
        return out

    eta = 0.01
    x = np.linspace(-3.0, 3.0, 601)
    dens = density_from_stieltjes(transform, x, eta)
    mass = np.trapezoid(dens, x)
    assert abs(mass - 1.0) <= 2e-2
    closed = np.sqrt(np.maximum(4.0 - x**2, 0.0)) / (2.0 * np.pi)
    away_from_edge = np.abs(np.abs(x) - 2.0) > 0.05
    pointwise = np.max(np.abs(dens - closed)[away_from_edge])
    assert pointwise <= 1e-2
    smoothed = np.array(
        [semicircle_transform(complex(xx, eta)).imag / np.pi for xx in x]
    )
    strong = np.max(np.abs(dens - smoothed))
    assert strong <= 1e-6
    print(
        f"criterion 09: PASS (transform {transform_gap:.1e}, mass {mass:.4f}, "
        f"pointwise {pointwise:.1e}, smoothed {strong:.1e})"
    )


def _degree_triple(n, seed):
    configs = {}
    for variant in ("chung_lu", "grg", "norros_riettu"):
        configs[variant] = EnsembleConfig(
            n=n, kernel=CONST, weights=POINT, variant=variant, seed=seed
        )
    return configs


_PAIRS = (
    ("chung_lu", "grg"),
    ("chung_lu", "norros_riettu"),
    ("grg", "norros_riettu"),
)


@pytest.mark.slow
def test_criterion_10_model_closeness():
    n = 10_000
    n_seeds = 20
    violations = 0
    worst_levy = 0.0
    hw_at_large = {pair: [] for pair in _PAIRS}
    for seed in range(n_seeds):
        configs = _degree_triple(n, seed)
        adjs = {v: sample_adjacency(c) for v, c in configs.items()}
        values = {}
        for variant, cfg in configs.items():
            m = scale_matrix(adjs[variant], cfg, "sparse")
            values[variant] = eigenvalues_symmetric(m)
            del m
        for a, b in _PAIRS:
            levy = levy_distance(values[a], values[b])
            hw = hw_bound_adjacency(
                adjs[a], adjs[b],
                1.0 / scale_factor(configs[a], "sparse"),
                1.0 / scale_factor(configs[b], "sparse"),
            )
            worst_levy = max(worst_levy, levy)
            assert levy < 0.05
            if levy**3 > hw + 1e-12:
                violations += 1
            hw_at_large[(a, b)].append(hw)
    assert violations == 0
    # Sampling alone fixes the coupling bound, so smaller sizes need no
    # eigensolves; means over ten seeds separate the 1/N trend cleanly.
    hw_means = {pair: {} for pair in _PAIRS}
    for size in (500, 2000):
        for seed in range(10):
            configs = _degree_triple(size, seed)
            adjs = {v: sample_adjacency(c) for v, c in configs.items()}
            for a, b in _PAIRS:
                hw_means[(a, b)].setdefault(size, []).append(
                    hw_bound_adjacency(
                        adjs[a], adjs[b],
                        1.0 / scale_factor(configs[a], "sparse"),
                        1.0 / scale_factor(configs[b], "sparse"),
                    )
                )
    for pair in _PAIRS:
        seq = [
            float(np.mean(hw_means[pair][500])),
            float(np.mean(hw_means[pair][2000])),
            float(np.mean(hw_at_large[pair])),
        ]
        assert seq[0] > seq[1] > seq[2]
    print(
        f"criterion 10: PASS (worst levy {worst_levy:.4f}, "
        f"violations {violations}/60)"
    )


@pytest.mark.slow
def test_criterion_11_concentration():
    lam = 5.0
    variances = {}
    for n in (500, 2000):
        vals = []
        for seed in range(200):
            ens = EnsembleConfig(
                n=n, kernel=CONST, weights=POINT, variant="homogeneous",
                seed=seed, lam=lam,
            )
            vals.append(empirical_trace_moment(sample_adjacency(ens), lam, 4))
        variances[n] = float(np.var(vals, ddof=1))
    ratio = variances[500] / variances[2000]
    assert ratio >= 2.0
    print(f"criterion 11: PASS (variance ratio {ratio:.1f})")
