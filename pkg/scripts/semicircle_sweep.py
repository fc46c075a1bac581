"""Sweep lambda and watch the sparse Stieltjes transform approach the semicircle.

For the constant kernel the dense limit is the semicircle law, whose transform
at z = 2i equals (sqrt(2) - 1)i.  The gap should shrink like 1/lambda.
"""

import argparse

import numpy as np

from ier_spectra.kernels import Kernel, WeightModel
from ier_spectra.stieltjes import (
    default_solver_config,
    solve_fixed_point,
    stieltjes_dense,
    stieltjes_sparse,
)


def semicircle_transform(z: complex) -> complex:
    return (-z + np.sqrt(z * z - 4.0)) / 2.0


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--lams", type=float, nargs="+", default=[5.0, 10.0, 20.0, 50.0])
    parser.add_argument("--z", type=complex, default=2j)
    args = parser.parse_args()

    kernel = Kernel.constant(1.0)
    mu = WeightModel.discrete([1.0], [1.0])
    target = semicircle_transform(args.z)
    dense, _ = stieltjes_dense(args.z, kernel, mu)
    print(f"z = {args.z}")
    print(f"semicircle transform  {target:.10f}")
    print(f"dense fixed point     {dense:.10f}  (gap {abs(dense - target):.3e})")
    print()
    print(f"{'lambda':>8}  {'sparse transform':>28}  {'gap to semicircle':>18}  iters")
    for lam in args.lams:
        cfg = default_solver_config(args.z, lam)
        phi = solve_fixed_point(cfg, kernel, mu)
        st = stieltjes_sparse(cfg, kernel, mu, phi=phi)
        print(f"{lam:8.2f}  {st:28.10f}  {abs(st - target):18.3e}  {phi.iterations:5d}")


if __name__ == "__main__":
    main()
