"""Regenerate src/hds/data/joe_kuo_1024.npz.

The table holds the first 1024 dimensions of the published Joe-Kuo
``new-joe-kuo-6.21201`` primitive polynomials and initial direction
numbers, taken here from scipy's bundled copy of the same data.
"""

from pathlib import Path

import numpy as np
from scipy.stats._sobol import get_poly_vinit

DIMS = 1024
OUT = Path(__file__).resolve().parent.parent / "src" / "hds" / "data" / "joe_kuo_1024.npz"


def main():
    poly = get_poly_vinit("poly", np.uint32)[:DIMS].astype(np.uint32)
    vinit = get_poly_vinit("vinit", np.uint64)[:DIMS].astype(np.uint32)
    np.savez_compressed(OUT, poly=poly, vinit=vinit)
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
