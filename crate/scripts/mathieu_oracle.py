"""Regenerate crates/hillbands/fixtures/mathieu_gaps.json.

Periodic and antiperiodic eigenvalues of -y'' + A cos(2 pi x) y on [0, 1]
from the Hill matrix in the Fourier basis, truncated far beyond the levels
kept in the table.
"""
import json
import sys

import numpy as np

AMPLITUDE = 10.0
MODES = 80
LEVELS = 12


def hill_matrix(offset):
    # basis exp(i pi (2m + offset) x), offset 0 periodic, 1 antiperiodic
    m = np.arange(-MODES, MODES + 1)
    h = np.diag((np.pi * (2 * m + offset)) ** 2)
    h += np.diag(np.full(2 * MODES, AMPLITUDE / 2), 1)
    h += np.diag(np.full(2 * MODES, AMPLITUDE / 2), -1)
    return h


def main():
    per = np.linalg.eigvalsh(hill_matrix(0))
    anti = np.linalg.eigvalsh(hill_matrix(1))
    rows = []
    for n in range(1, LEVELS + 1):
        if n % 2 == 0:
            lo, hi = per[n - 1], per[n]
        else:
            lo, hi = anti[n - 1], anti[n]
        rows.append({"n": n, "lo": float(lo), "hi": float(hi), "width": float(hi - lo)})
    table = {
        "potential": {"family": "lambda_independent", "q": {"cos": [AMPLITUDE]}},
        "ground": float(per[0]),
        "gaps": rows,
    }
    json.dump(table, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
