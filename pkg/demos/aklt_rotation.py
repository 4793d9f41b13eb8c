"""Compile and run a logical z-rotation on the AKLT wire, then watch the error fall as 1/N."""

import math

import numpy as np

from sptmbqc import mbqc, mps


def main():
    t = mps.aklt_tensor()
    nu = mbqc.calibrate_nu(t)
    print("nu matrix (all entries 1/3):")
    print(np.round(nu.nu.real, 12))

    plus = np.array([1, 1]) / math.sqrt(2)
    p = mbqc.compile_rotation(t, nu, "x", "y", math.pi, math.pi / 2, 1e-2)
    out = mbqc.run_program(p, plus, t)
    print(f"\npi/2 rotation at eps = 1e-2: N = {p.N}, physical angle per step {p.physical_angle:.4g}")
    print(f"logical error {mbqc.logical_error(t, p, out, plus):.3e}")

    rows = mbqc.error_scan(t, "x", "y", math.pi / 2, [50, 100, 200, 400, 800, 1600, 3200], [0], nu=nu)
    print("\n   N   error")
    for r in rows:
        print(f"{r.N:5d}   {r.error:.3e}")
    print(f"log-log slope {mbqc.loglog_slope(rows):.3f}")


if __name__ == "__main__":
    main()
