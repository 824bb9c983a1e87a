"""Build family members, check the shift intervals and the PDE criterion."""
import numpy as np

from quarticflow import build_base, build_shifted, gaussian_curvature
from quarticflow.criterion import D_NONZERO, D_ZERO, FAnsatz, check_grid
from quarticflow.family import admissible_p
from quarticflow.quartic_ode import FamilyParams, solve_u


def main():
    for a in (1.0, 3.0):
        print(f"a={a:g}: admissible shifts p in {admissible_p(a).describe()}")

    u = np.linspace(-3, 3, 7)
    for name, sys in [("base(0,1)", build_base(0.0)), ("base(2,1)", build_base(2.0)),
                      ("shifted(1,1,p=1)", build_shifted(1.0, p=1.0))]:
        K = gaussian_curvature(sys, (0.0, u))
        print(f"{name:18s} curvature along phi=0: {np.array2string(K, precision=3)}")

    usol = solve_u(FamilyParams(1.0), 0.0, (-5, 5), tol=1e-13)
    for ans in (FAnsatz(usol, D_ZERO, c=1.0), FAnsatz(usol, D_NONZERO, d=0.5, p=1.0)):
        good = check_grid(ans).max_relative
        bad = check_grid(ans.perturbed(xi_offset=0.01)).max_relative
        print(f"criterion residual ({ans.xi_mode}): {good:.1e}, with xi'' + 0.01: {bad:.1e}")


if __name__ == "__main__":
    main()
