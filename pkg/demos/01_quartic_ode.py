"""Solve u'^4 = 1 + a u^2 + u^4 and inspect the pole functions."""
import numpy as np

from quarticflow.quartic_ode import FamilyParams, compute_pole_functions, residual_eq4, solve_u


def main():
    y = np.linspace(-5, 5, 2001)
    for a in (-1.0, 0.0, 1.0, 2.0, 3.0):
        sol = solve_u(FamilyParams(a), 0.0, (-5, 5))
        res = np.max(np.abs(residual_eq4(sol(y), a)))
        print(f"a={a:+.0f}  u(5)={sol.u(5.0):12.6f}  third-order residual {res:.1e}")
    sol = solve_u(FamilyParams(2.0), 0.0, (-5, 5))
    print("a=2 is sinh: max error", np.max(np.abs(sol.u(y) - np.sinh(y))))

    # u = e^y g(e^{-2y}) near the pole y -> +inf
    pf = compute_pole_functions(1.0)
    yy = np.array([0.5, 1.0, 2.0, 3.0])
    sol = solve_u(FamilyParams(1.0), 0.0, (-1, 4))
    print("g(1) =", pf.g(1.0), " g(0) =", pf.g(0.0))
    print("e^y g(e^-2y) - u(y):", np.exp(yy) * pf.g(np.exp(-2 * yy)) - sol.u(yy))


if __name__ == "__main__":
    main()
