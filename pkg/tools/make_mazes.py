"""Generate the bundled serpentine maze grids as binary PGM files.

Each maze is a 640x480 occupancy image: gray >= 128 is free space.
Vertical walls with alternating top/bottom gaps force a snake path from
the start (40, 40) to the goal (600, 440); difficulty rises with wall
count and falls with gap height.

Usage: python3 tools/make_mazes.py [out_dir]
"""

from __future__ import annotations

import os
import sys

import numpy as np

WIDTH = 640
HEIGHT = 480
MARGIN = 20  # gap offset from the boundary, pixels

# name -> (wall x positions, wall thickness, gap height)
MAZES = {
    "maze1": ((200, 420), 18, 80),
    "maze2": ((140, 270, 400, 530), 18, 44),
    "maze3": ((120, 205, 290, 375, 460, 545), 16, 30),
}


def build_grid(walls, thickness, gap) -> np.ndarray:
    img = np.full((HEIGHT, WIDTH), 255, dtype=np.uint8)
    for idx, x0 in enumerate(walls):
        img[:, x0 : x0 + thickness] = 0
        if idx % 2 == 0:  # first gap at the top (large y), then alternate
            j0 = HEIGHT - MARGIN - gap
        else:
            j0 = MARGIN
        img[j0 : j0 + gap, x0 : x0 + thickness] = 255
    return img


def write_pgm(path, img: np.ndarray) -> None:
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n# generated by tools/make_mazes.py\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def main() -> None:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "src/lowdisc/data/mazes"
    os.makedirs(out_dir, exist_ok=True)
    for name, (walls, thickness, gap) in MAZES.items():
        path = os.path.join(out_dir, f"{name}.pgm")
        write_pgm(path, build_grid(walls, thickness, gap))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
