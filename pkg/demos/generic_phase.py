"""A generic state in the Haldane phase: calibration, junk relaxation and a compiled gate."""

import math

import numpy as np

from sptmbqc import mbqc, mps
from sptmbqc.linalg import Channel


def main():
    t = mps.haldane_tensor(2, 8)
    fp = mps.fixed_point_data(Channel(list(t.junk)))
    print(f"junk dimension 2, lambda1 = {fp.lambda1:.4f}, correlation length {fp.xi:.4f}")

    nu = mbqc.calibrate_nu(t)
    print("\n|nu_ij| / nu and phase, spectral vs operational:")
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        est = mbqc.operational_nu(t, i, j)
        print(f"  {t.label(i)}{t.label(j)}: {nu.ratio(i, j):.6f} {nu.phases[i, j]:+.4f}   "
              f"{est.ratio:.6f} {est.phase:+.4f}")

    ms = np.arange(5, 31)
    errs = mbqc.pumping_errors(t, ms)
    print(f"\njunk relaxation rate {mbqc.decay_rate(ms, errs):.4f} vs ln lambda1 {math.log(fp.lambda1):.4f}")

    psi = np.array([1, np.exp(0.3j)]) / math.sqrt(2)
    for d in (1e-3, 2e-3):
        c = mbqc.execute_and_compare(psi, t, "x", "y", d, math.pi, 80, nu)
        print(f"first-order gate residual at dtheta = {d:g}: {c.residual:.2e}")

    p = mbqc.compile_rotation(t, nu, "x", "y", math.pi, math.pi / 2, 1e-2)
    err = mbqc.logical_error(t, p, mbqc.run_program(p, psi, t), psi)
    print(f"\npi/2 rotation: N = {p.N}, pump m = {p.m}, cost {p.cost}, logical error {err:.2e}")


if __name__ == "__main__":
    main()
