"""Regenerate the bundled ASCII worlds in src/slamstop/worlds/."""
import random
from pathlib import Path

import numpy as np

RES = 0.05
OUT = Path(__file__).resolve().parents[1] / "src" / "slamstop" / "worlds"


def cells(m):
    return int(round(m / RES))


class Canvas:
    def __init__(self, w_m, h_m):
        self.g = np.zeros((cells(h_m), cells(w_m)), dtype=bool)  # row 0 = y 0
        self.g[:2] = self.g[-2:] = True
        self.g[:, :2] = self.g[:, -2:] = True

    def block(self, x0, y0, x1, y1, value=True):
        self.g[cells(y0):cells(y1), cells(x0):cells(x1)] = value

    def hwall(self, y, x0, x1, doors=()):
        self.block(x0, y - 0.05, x1, y + 0.05)
        for a, b in doors:
            self.block(a, y - 0.05, b, y + 0.05, False)

    def vwall(self, x, y0, y1, doors=()):
        self.block(x - 0.05, y0, x + 0.05, y1)
        for a, b in doors:
            self.block(x - 0.05, a, x + 0.05, b, False)

    def write(self, name):
        rows = ["".join("#" if v else "." for v in row) for row in self.g[::-1]]
        (OUT / f"{name}.world").write_text(f"resolution {RES}\n" + "\n".join(rows) + "\n")
        free = (~self.g).sum() * RES * RES
        print(f"{name}: {self.g.shape[1]}x{self.g.shape[0]} cells, free {free:.1f} m^2")


def rooms():
    c = Canvas(13.0, 12.0)
    c.hwall(5.0, 0.0, 13.0, doors=[(2.0, 3.0), (9.6, 10.6)])
    c.vwall(6.0, 0.0, 5.0, doors=[(2.0, 3.0)])
    c.vwall(4.5, 5.0, 12.0, doors=[(8.0, 9.0)])
    c.vwall(9.0, 5.0, 12.0, doors=[(9.4, 10.4)])
    c.hwall(8.5, 9.0, 13.0, doors=[(11.0, 12.0)])
    # furniture
    c.block(1.0, 1.0, 1.8, 1.6)
    c.block(8.0, 1.5, 9.0, 2.3)
    c.block(11.0, 3.2, 12.2, 3.8)
    c.block(6.2, 10.5, 7.4, 11.3)
    c.block(1.2, 10.0, 2.0, 10.6)
    c.block(10.4, 6.0, 11.0, 7.0)
    c.write("closed_rooms_small")


def maze():
    n, cell = 5, 1.6
    c = Canvas(n * cell, n * cell)
    rnd = random.Random(7)
    seen = {(0, 0)}
    stack = [(0, 0)]
    open_ = set()
    while stack:
        i, j = stack[-1]
        nb = [(i + di, j + dj) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
              if 0 <= i + di < n and 0 <= j + dj < n and (i + di, j + dj) not in seen]
        if not nb:
            stack.pop()
            continue
        k = rnd.choice(nb)
        open_.add(frozenset([(i, j), k]))
        seen.add(k)
        stack.append(k)
    for i in range(n):
        for j in range(n):
            if i + 1 < n and frozenset([(i, j), (i + 1, j)]) not in open_:
                c.vwall((i + 1) * cell, j * cell, (j + 1) * cell + 0.05)
            if j + 1 < n and frozenset([(i, j), (i, j + 1)]) not in open_:
                c.hwall((j + 1) * cell, i * cell, (i + 1) * cell + 0.05)
    c.write("closed_maze")


if __name__ == "__main__":
    rooms()
    maze()
