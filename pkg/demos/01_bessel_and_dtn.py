"""Bessel functions and mode-wise Dirichlet-to-Neumann values.

Run: python3 demos/01_bessel_and_dtn.py
"""

from __future__ import annotations

from itelab import oracle
from itelab.dtn import dtn_0, dtn_n, laurent_at_pole
from itelab.profiles import gamma_plus
from itelab.radialode import dirichlet_eigenvalue
from itelab.specialfun import bessel_j, bessel_j_zero, bessel_y


def main() -> None:
    # Values come back as (mantissa, derivative, log_scale); unscaled() folds the scale in.
    v, d = bessel_j(3, 7.5).unscaled()
    rv, rd = oracle.j(3, 7.5)
    print(f"J_3(7.5)  = {v:.16f}   mpmath {rv:.16f}")
    print(f"J_3'(7.5) = {d:.16f}   mpmath {rd:.16f}")

    # Far below the turning point Y_l overflows a double; the scale keeps it finite.
    y = bessel_y(50, 1e-6)
    print(f"Y_50(1e-6) = {y.value:.6e} * exp({y.log_scale:.2f})")
    print(f"j_(0,1) = {bessel_j_zero(0, 1):.15f}")

    p = gamma_plus()
    for l in (0, 5, 20):
        lam = 10.0
        print(f"l={l:2d}  Lambda_n={dtn_n(p, l, lam): .10f}  Lambda_0={dtn_0(l, lam, p.R): .10f}")

    # Near a Dirichlet eigenvalue the D-N value has a simple pole with negative residue.
    pole = dirichlet_eigenvalue(p, 1, 1)
    data = laurent_at_pole(p, 1, pole)
    print(f"first mode-1 pole {pole:.10f}: residue {data.residue:.8e} (fit {data.residue_fit:.8e})")


if __name__ == "__main__":
    main()
