"""Integrate across the two pole charts and take a Poincare section."""
import numpy as np

from quarticflow import IntegratorConfig, PhaseState, Section, build_base, integrate, poincare


def main():
    sys = build_base(0.0)
    s0 = PhaseState("band", np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    for scheme in ("implicit_midpoint", "midpoint4"):
        traj = integrate(sys, s0, 100.0, IntegratorConfig(scheme=scheme))
        print(f"{scheme:18s} drift {traj.energy_error():.2e}  chart switches {len(traj.switches)}")
    ev = traj.switches[0]
    print(f"first switch at t={ev.t:.3f}: {ev.source}->{ev.target}, dH={ev.H_after - ev.H_before:.1e}")

    cuts = poincare(sys, traj, Section("q1", 0.0, +1, "band"))
    pts = np.array([[s.q[1], s.p[1]] for _, s in cuts])
    print(f"{len(cuts)} crossings of phi=0; (u, p_u) range u [{pts[:, 0].min():.3f}, {pts[:, 0].max():.3f}]")


if __name__ == "__main__":
    main()
