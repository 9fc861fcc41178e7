"""Zero-order rate from P_nz: exact value against Taylor orders 1 to 3.

    python scripts/taylor_table.py > taylor.csv
"""

import csv
import sys

import numpy as np

from lctcq.source_model import rate_from_pnz


def main():
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["p_nz", "exact", "order1", "order2", "order3", "rel_err3"])
    for p in np.linspace(0.02, 0.98, 25):
        exact = rate_from_pnz(float(p), 0)
        t = [rate_from_pnz(float(p), k) for k in (1, 2, 3)]
        out.writerow([f"{p:.2f}", exact, *t, (exact - t[2]) / exact])


if __name__ == "__main__":
    main()
