"""Cross-check combinatorial moments against the fixed-point solver.

Far from the spectrum the transform admits the expansion
y * Im St(iy) = m0 - m2 / y^2 + m4 / y^4 - ...  so partial sums built from the
partition moments must approach the solver value as orders are added.
"""

import argparse

import numpy as np

from ier_spectra.kernels import Kernel, WeightModel
from ier_spectra.moments import limiting_moment
from ier_spectra.stieltjes import default_solver_config, solve_fixed_point, stieltjes_sparse


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--lam", type=float, default=10.0)
    parser.add_argument("--y", type=float, default=6.0)
    parser.add_argument("--k-max", type=int, default=8)
    args = parser.parse_args()

    kernel = Kernel.rank1(lambda x: x, r_bound=1.5, r_lipschitz=1.0)
    mu = WeightModel.discrete([0.5, 1.5], [0.5, 0.5])

    z = 1j * args.y
    cfg = default_solver_config(z, args.lam, n_u=512, n_v=1024, tol=1e-12)
    phi = solve_fixed_point(cfg, kernel, mu)
    st = stieltjes_sparse(cfg, kernel, mu, phi=phi)
    solver_value = args.y * st.imag
    print(f"lambda = {args.lam}, y = {args.y}")
    print(f"solver y*Im St(iy) = {solver_value:.12f}")
    print()
    print(f"{'order':>5}  {'m_k':>16}  {'partial sum':>16}  {'gap to solver':>14}")
    partial = 0.0
    for k in range(0, args.k_max + 1, 2):
        m_k = limiting_moment(k, args.lam, kernel, mu).value
        partial += (-1) ** (k // 2) * m_k / args.y**k
        print(f"{k:5d}  {m_k:16.8f}  {partial:16.12f}  {abs(partial - solver_value):14.3e}")
    tail = limiting_moment(args.k_max + 2, args.lam, kernel, mu).value / args.y ** (args.k_max + 2)
    print(f"\nnext-term bound on the truncation error: {tail:.3e}")


if __name__ == "__main__":
    main()
