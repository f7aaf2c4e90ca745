"""Generate the bundled pools of optimized 2-D point sets.

Each pool member is produced by direct gradient descent on the Hickernell
L2 loss (optimize_direct) with a distinct seed, then saved as a point-set
text file named n{count}_m{member}.txt.  Benchmark configs draw members
pseudorandomly per run.

Usage: python3 tools/make_pools.py [out_dir]
"""

from __future__ import annotations

import os
import sys
import time

from lowdisc.discrepancy import hickernell_l2
from lowdisc.mpmc import TrainConfig, optimize_direct
from lowdisc.pointset import save_points

MEMBERS = 8
# n -> (lr, epochs); larger sets need longer schedules
SIZES = {64: (0.1, 3000), 128: (0.1, 3000), 256: (0.1, 3000), 512: (0.1, 6000)}


def main() -> None:
    out_root = sys.argv[1] if len(sys.argv) > 1 else "src/lowdisc/data/pools"
    out_dir = os.path.join(out_root, "d2")
    os.makedirs(out_dir, exist_ok=True)
    for n, (lr, epochs) in SIZES.items():
        for member in range(MEMBERS):
            t0 = time.perf_counter()
            cfg = TrainConfig(
                n=n, d=2, epochs=epochs, seed=member, lr=lr, loss_kind="hickernell"
            )
            ps = optimize_direct(cfg)
            path = os.path.join(out_dir, f"n{n}_m{member}.txt")
            save_points(ps, path)
            disc = hickernell_l2(ps).value
            print(
                f"{path}: lr={lr} epochs={epochs} seed={member} "
                f"hickernell={disc:.6f} ({time.perf_counter() - t0:.1f}s)",
                flush=True,
            )


if __name__ == "__main__":
    main()
