"""Grid eigenvalues on the unit disc next to radial shooting.

Both Pucci extremal operators with (a, A) = (1, 2) are run for alpha = 0 and
alpha = 1. The grid bracket comes from bisection with Collatz-Wielandt
certificates, the radial value from shooting on the ODE for g(|x|).
"""

from __future__ import annotations

from pucci_eigen import Ball, OperatorSpec, build_grid, estimate_lambda_bar, lemma1_bound, shoot_eigen


def main() -> None:
    for h in (1 / 16, 1 / 32):
        grid = build_grid(Ball([0.0, 0.0], 1.0), h, 2)
        print(f"h = 1/{round(1 / h)}: {grid.n_interior} interior nodes")
        for alpha in (0.0, 1.0):
            for sign in ("plus", "minus"):
                op = OperatorSpec(1, 2, alpha, sign)
                res = estimate_lambda_bar(op, grid)
                radial = shoot_eigen(op, 2).lambda_hat
                bound = lemma1_bound(op, 2, 1.0)
                print(f"  alpha={alpha:g} {sign:5s} grid {res.lambda_hat:9.5f}  shooting {radial:9.5f}  "
                      f"rel diff {(res.lambda_hat - radial) / radial:+.2e}  bound {bound:.3f}")


if __name__ == "__main__":
    main()
