"""Exact symbol of the D-N difference and its numerical check.

The recursion runs on rational coefficients with symbolic boundary jets
of the index; the resulting grade-3 and grade-4 terms predict
Lambda_n - Lambda_0 for high modes.

Run: python3 demos/03_symbol_calculus.py
"""

from __future__ import annotations

from itelab.profiles import gamma_plus
from itelab.symbolcalc import build_jet, dn_difference, e_difference, symbol_vs_numeric


def main() -> None:
    print("E_3 - E_03 on a flat boundary:")
    print(e_difference(3).pretty())
    print("\nparameter-graded E_1 - E_01:")
    print(e_difference(1, parameterized=True).pretty())

    diff = dn_difference(build_jet("disk", 4), 4)
    print("\ndisk D-N difference, grades 3 and 4:")
    print(diff[3].pretty())
    print(diff[4].pretty())

    print("\nrelative error of the symbol against the ODE solver at lambda = 10:")
    for row in symbol_vs_numeric(gamma_plus(), [20, 40, 80, 160], 10.0):
        print(f"  l = {row.l:3d}  grade 3: {row.error_leading:.2e}   grades 3+4: {row.error_next:.2e}")


if __name__ == "__main__":
    main()
