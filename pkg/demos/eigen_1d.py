"""Principal eigenvalues on (-1, 1) against closed forms.

For |u'|^alpha u'' the one-dimensional problem reduces to the p-Laplacian
with p = alpha + 2, so the eigenvalue is (pi_p / 2)^p with
pi_p = 2 pi / (p sin(pi / p)). The grid estimate converges at first order.
"""

from __future__ import annotations

import numpy as np

from pucci_eigen import Interval, OperatorSpec, estimate_lambda_bar, shoot_eigen


def closed_form(alpha: float) -> float:
    p = alpha + 2
    return (np.pi / (p * np.sin(np.pi / p))) ** p


def main() -> None:
    for alpha in (0.0, 1.0, 2.0):
        op = OperatorSpec(1, 1, alpha)
        exact = closed_form(alpha)
        radial = shoot_eigen(op, 1).lambda_hat
        print(f"alpha = {alpha:g}: closed form {exact:.7f}, shooting {radial:.7f}")
        for h in (1 / 32, 1 / 64, 1 / 128):
            res = estimate_lambda_bar(op, Interval(-1, 1), h=h)
            print(f"  h = 1/{round(1 / h):<4d} grid {res.lambda_hat:.6f}  "
                  f"bracket [{res.lambda_lo:.6f}, {res.lambda_hi:.6f}]  "
                  f"rel err {abs(res.lambda_hat - exact) / exact:.2e}")


if __name__ == "__main__":
    main()
