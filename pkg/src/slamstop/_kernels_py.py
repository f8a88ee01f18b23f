"""Pure-Python reference versions of the grid kernels.

Same algorithms and the same floating-point operation order as the compiled
module, so results match bit for bit.  Roughly two orders of magnitude
slower; used when the extension is not built or ``SLAMSTOP_PURE_PYTHON=1``.
"""
import heapq
import math

import numpy as np

SQRT2 = 1.4142135623730951
INF = math.inf


def _walker(x0, y0, dx, dy, res):
    gx = x0 / res
    gy = y0 / res
    ix = math.floor(gx)
    iy = math.floor(gy)
    if dx > 0.0:
        sx, tmx, tdx = 1, ((ix + 1) - gx) * res / dx, res / dx
    elif dx < 0.0:
        sx, tmx, tdx = -1, (gx - ix) * res / (-dx), res / (-dx)
    else:
        sx, tmx, tdx = 0, INF, INF
    if dy > 0.0:
        sy, tmy, tdy = 1, ((iy + 1) - gy) * res / dy, res / dy
    elif dy < 0.0:
        sy, tmy, tdy = -1, (gy - iy) * res / (-dy), res / (-dy)
    else:
        sy, tmy, tdy = 0, INF, INF
    return [ix, iy, sx, sy, tmx, tmy, tdx, tdy, 0.0]


def _step(w):
    if w[4] < w[5]:
        w[8] = w[4]
        w[4] = w[4] + w[6]
        w[0] += w[2]
    else:
        w[8] = w[5]
        w[5] = w[5] + w[7]
        w[1] += w[3]


def cast_rays(occ, res, x0, y0, dxs, dys, max_range):
    H, W = occ.shape
    nb = len(dxs)
    ranges = np.full(nb, max_range, dtype=np.float64)
    hits = np.zeros(nb, dtype=np.uint8)
    occ_l = occ.tolist()
    for k in range(nb):
        w = _walker(x0, y0, float(dxs[k]), float(dys[k]), res)
        while True:
            ix, iy = w[0], w[1]
            if ix < 0 or ix >= W or iy < 0 or iy >= H:
                break
            if occ_l[iy][ix]:
                ranges[k] = w[8]
                hits[k] = 1
                break
            _step(w)
            if w[8] > max_range:
                break
    return ranges, hits


def scan_marks(mark, res, x0, y0, dxs, dys, ranges, hits, eps):
    H, W = mark.shape
    for k in range(len(dxs)):
        w = _walker(x0, y0, float(dxs[k]), float(dys[k]), res)
        r = float(ranges[k]) + eps
        while True:
            ix, iy = w[0], w[1]
            if ix < 0 or ix >= W or iy < 0 or iy >= H:
                break
            t_out = w[4] if w[4] < w[5] else w[5]
            if t_out > r:
                if hits[k]:
                    mark[iy, ix] = 2
                elif mark[iy, ix] == 0:
                    mark[iy, ix] = 1
                break
            if mark[iy, ix] == 0:
                mark[iy, ix] = 1
            _step(w)


def count_unknown_visible(logodds, tau, res, x0, y0, dxs, dys, max_range):
    H, W = logodds.shape
    lo = logodds.tolist()
    seen = set()
    for k in range(len(dxs)):
        w = _walker(x0, y0, float(dxs[k]), float(dys[k]), res)
        while True:
            ix, iy = w[0], w[1]
            if ix < 0 or ix >= W or iy < 0 or iy >= H:
                break
            v = lo[iy][ix]
            if v > tau:
                break
            if abs(v) <= tau:
                seen.add((iy, ix))
            _step(w)
            if w[8] > max_range:
                break
    return len(seen)


def _octile(ay, ax, by, bx):
    ddy = abs(ay - by)
    ddx = abs(ax - bx)
    if ddy < ddx:
        return (ddx - ddy) + SQRT2 * ddy
    return (ddy - ddx) + SQRT2 * ddx


_MOVES = [(-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
          (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2)]


def astar(free, sy, sx, gy, gx):
    H, W = free.shape
    if not (0 <= sy < H and 0 <= sx < W and 0 <= gy < H and 0 <= gx < W):
        return None
    if not free[sy, sx] or not free[gy, gx]:
        return None
    fr = free.tolist()
    start, goal = sy * W + sx, gy * W + gx
    g = {start: 0.0}
    parent = {start: -1}
    closed = set()
    heap = [(_octile(sy, sx, gy, gx), start)]
    found = False
    while heap:
        _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        closed.add(cur)
        if cur == goal:
            found = True
            break
        cy, cx = divmod(cur, W)
        gc = g[cur]
        for k, (ddy, ddx, cost) in enumerate(_MOVES):
            ny, nx = cy + ddy, cx + ddx
            if ny < 0 or ny >= H or nx < 0 or nx >= W:
                continue
            if not fr[ny][nx]:
                continue
            if k >= 4 and (not fr[cy][nx] or not fr[ny][cx]):
                continue
            nxt = ny * W + nx
            if nxt in closed:
                continue
            ng = gc + cost
            if ng < g.get(nxt, INF):
                g[nxt] = ng
                parent[nxt] = cur
                heapq.heappush(heap, (ng + _octile(ny, nx, gy, gx), nxt))
    if not found:
        return None
    path = []
    cur = goal
    while cur != -1:
        path.append(divmod(cur, W))
        cur = parent[cur]
    path.reverse()
    return path
