"""Tour of the univariate B-spline layer.

Samples a basis on the unit interval, checks the partition-of-unity and
identity-reproduction properties numerically, and tabulates a quasi-interpolant
of a smooth function at two resolutions to show the error shrinking.

Run with ``python demos/basis_functions.py``.
"""

import numpy as np

from exsplinet import bspline


def main():
    N, p = 8, 3
    xs = np.linspace(0.0, 1.0, 9)
    B = bspline.basis_matrix(N, p, xs)
    print(f"basis: N={N}, p={p}")
    print("row sums (should all be 1):", np.round(B.sum(axis=1), 12))

    g = bspline.greville(N, p)
    print("Greville sites:", np.round(g, 4))
    print("identity reproduction max error:", np.max(np.abs(B @ g - xs)))

    f = lambda x: np.sin(2 * np.pi * x)
    probe = np.linspace(0.0, 1.0, 1001)
    for n in (8, 16, 32):
        spl = bspline.Spline1D(
            weights=bspline.schoenberg_weights(f, n, 3), basis_count=n, degree=3
        )
        err = max(abs(bspline.de_boor_eval(spl, float(x)) - f(x)) for x in probe)
        print(f"quasi-interpolant N={n:3d}: max error {err:.3e}")


if __name__ == "__main__":
    main()
