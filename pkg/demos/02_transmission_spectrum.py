"""Interior transmission eigenvalues and branch accounting for one medium.

Scans every mode up to lambda = 300 for the rising-index reference
medium, prints the first few eigenvalues, and checks that each one is a
non-scattering energy of its partial wave.

Run: python3 demos/02_transmission_spectrum.py
"""

from __future__ import annotations

from itelab.profiles import gamma_plus
from itelab.spectra import decade_check, default_alpha, survey, weyl_volumes


def main() -> None:
    p = gamma_plus()
    alpha = default_alpha(p)
    sv = survey(p, 300.0, alpha)
    print(f"alpha = {alpha:.6f}, modes 0..{sv.cutoff}, {len(sv.records)} eigenvalues below 300")
    for rec in sv.records[:8]:
        chk = decade_check(p, rec)
        print(f"  lambda* = {rec.lambda_star:12.8f}  l = {rec.mode:2d}  |a_l| = {rec.min_scattering_abs:.1e}"
              f"  decade median {chk.median_abs_a:.1e}")

    rep = sv.report(300.0)
    vn, v0 = weyl_volumes(p)
    print(f"N_n = {rep.N_n}, N_0 = {rep.N_0}, N_T = {rep.N_T}")
    print(f"lower bound gamma (N_n - N_0) - N_-(alpha) = {rep.weyl_bound}")
    print(f"N_T / lambda = {rep.N_T / 300:.3f} vs gamma (V_n - V_0) = {p.gamma * (vn - v0):.3f}")


if __name__ == "__main__":
    main()
