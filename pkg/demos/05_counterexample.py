"""Why the a-priori coefficient bound K is necessary.

The oscillatory family q_m jumps from 1 to A_m ~ m^2 inside |x| < r.
Between members m and 2m the internal data stay uniformly close (gap
bounded by 2) while the coefficients separate quadratically, so no
stability estimate can hold uniformly once K is allowed to grow.  The
measurement floor H stays bounded away from zero, showing H is not the
failing hypothesis.
"""

import numpy as np

from hybridlab import OscillatoryFamily, pathology_table
from hybridlab.counterexample import h_integral, residual_check


def main():
    r, rr = 1.0, 2.0
    rows = pathology_table(r, rr, 12)
    print("m    A_m          data_gap   coef_gap(L1)  gap/m^2    K needed")
    for row in rows:
        print(f"{row.m:<3d}  {row.a_m:10.2f}  {row.data_gap:.6f}  "
              f"{row.coef_gaps[1.0]:12.2f}  {row.coef_gaps[1.0] / row.m**2:8.2f}  "
              f"{row.k_required:10.1f}")

    print(f"\nmeasurement floor (m-independent): "
          f"{h_integral(r, rr):.6f} = {rows[0].h_integral:.6f}")

    fam = OscillatoryFamily(r=r, rr=rr, m=3)
    res = residual_check(fam, h=1e-4)
    print(f"closed-form member m=3 satisfies the equation: "
          f"max residual {res:.3e} under centered differences (h=1e-4)")

    gap_ratio = rows[-1].data_gap / rows[0].data_gap
    coef_ratio = rows[-1].coef_gaps[1.0] / rows[0].coef_gaps[1.0]
    print(f"\nfrom m=1 to m={rows[-1].m}: data gap grew x{gap_ratio:.3f}, "
          f"coefficient gap grew x{coef_ratio:.1f}")


if __name__ == "__main__":
    main()
