"""Convert scipy's bundled Sobol initialization data to our text table.

scipy ships the Joe/Kuo direction numbers as packed arrays:
`poly` holds the full primitive polynomial bit pattern and `vinit` the initial
direction integers m_1..m_s per dimension.  The text format written here is the
classic one: ``d s a m_1 .. m_s`` per line, where ``a`` encodes the middle
polynomial coefficients.

Run from the repo root:  python3 tools/make_sobol_table.py
"""

import pathlib

import numpy as np
from scipy.stats import _sobol

OUT = pathlib.Path(__file__).resolve().parent.parent / "src/lowdisc/data/sobol_direction_numbers.txt"
MAX_DIM = 21  # table covers output dimensions 2..MAX_DIM (dimension 1 needs no entry)


def main():
    data = np.load(pathlib.Path(_sobol.__file__).parent / "_sobol_direction_numbers.npz")
    poly = data["poly"]
    vinit = data["vinit"]
    lines = ["d s a m_i"]
    for dim in range(2, MAX_DIM + 1):
        p = int(poly[dim - 1])
        s = p.bit_length() - 1
        a = (p - (1 << s) - 1) >> 1
        m = [int(v) for v in vinit[dim - 1][:s]]
        lines.append(f"{dim} {s} {a} " + " ".join(str(x) for x in m))
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({MAX_DIM - 1} dimensions)")


if __name__ == "__main__":
    main()
