# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled grid kernels: ray traversal and A*.

Arithmetic mirrors ``_kernels_py`` operation for operation so both backends
return bit-identical results.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, INFINITY
from libcpp.queue cimport priority_queue
from libcpp.pair cimport pair

cnp.import_array()

ctypedef long long i64

cdef double SQRT2 = 1.4142135623730951


cdef struct Walker:
    int ix
    int iy
    int sx
    int sy
    double tmx
    double tmy
    double tdx
    double tdy
    double t_in


cdef inline void walker_init(Walker* w, double x0, double y0, double dx, double dy, double res) noexcept nogil:
    cdef double gx = x0 / res
    cdef double gy = y0 / res
    w.ix = <int>floor(gx)
    w.iy = <int>floor(gy)
    w.t_in = 0.0
    if dx > 0.0:
        w.sx = 1
        w.tmx = ((w.ix + 1) - gx) * res / dx
        w.tdx = res / dx
    elif dx < 0.0:
        w.sx = -1
        w.tmx = (gx - w.ix) * res / (-dx)
        w.tdx = res / (-dx)
    else:
        w.sx = 0
        w.tmx = INFINITY
        w.tdx = INFINITY
    if dy > 0.0:
        w.sy = 1
        w.tmy = ((w.iy + 1) - gy) * res / dy
        w.tdy = res / dy
    elif dy < 0.0:
        w.sy = -1
        w.tmy = (gy - w.iy) * res / (-dy)
        w.tdy = res / (-dy)
    else:
        w.sy = 0
        w.tmy = INFINITY
        w.tdy = INFINITY


cdef inline void walker_step(Walker* w) noexcept nogil:
    if w.tmx < w.tmy:
        w.t_in = w.tmx
        w.tmx = w.tmx + w.tdx
        w.ix = w.ix + w.sx
    else:
        w.t_in = w.tmy
        w.tmy = w.tmy + w.tdy
        w.iy = w.iy + w.sy


def cast_rays(const cnp.uint8_t[:, ::1] occ, double res, double x0, double y0,
              const double[::1] dxs, const double[::1] dys, double max_range):
    cdef Py_ssize_t nb = dxs.shape[0]
    cdef int H = occ.shape[0]
    cdef int W = occ.shape[1]
    ranges_arr = np.full(nb, max_range, dtype=np.float64)
    hits_arr = np.zeros(nb, dtype=np.uint8)
    cdef double[::1] ranges = ranges_arr
    cdef cnp.uint8_t[::1] hits = hits_arr
    cdef Walker w
    cdef Py_ssize_t k
    with nogil:
        for k in range(nb):
            walker_init(&w, x0, y0, dxs[k], dys[k], res)
            while True:
                if w.ix < 0 or w.ix >= W or w.iy < 0 or w.iy >= H:
                    break
                if occ[w.iy, w.ix]:
                    ranges[k] = w.t_in
                    hits[k] = 1
                    break
                walker_step(&w)
                if w.t_in > max_range:
                    break
    return ranges_arr, hits_arr


def scan_marks(cnp.uint8_t[:, ::1] mark, double res, double x0, double y0,
               const double[::1] dxs, const double[::1] dys,
               const double[::1] ranges, const cnp.uint8_t[::1] hits, double eps):
    """Mark cells crossed by each beam: 1 = pass-through, 2 = endpoint hit."""
    cdef Py_ssize_t nb = dxs.shape[0]
    cdef int H = mark.shape[0]
    cdef int W = mark.shape[1]
    cdef Walker w
    cdef Py_ssize_t k
    cdef double t_out, r
    with nogil:
        for k in range(nb):
            walker_init(&w, x0, y0, dxs[k], dys[k], res)
            r = ranges[k] + eps
            while True:
                if w.ix < 0 or w.ix >= W or w.iy < 0 or w.iy >= H:
                    break
                t_out = w.tmx if w.tmx < w.tmy else w.tmy
                if t_out > r:
                    if hits[k]:
                        mark[w.iy, w.ix] = 2
                    elif mark[w.iy, w.ix] == 0:
                        mark[w.iy, w.ix] = 1
                    break
                if mark[w.iy, w.ix] == 0:
                    mark[w.iy, w.ix] = 1
                walker_step(&w)


def count_unknown_visible(const double[:, ::1] logodds, double tau, double res,
                          double x0, double y0, const double[::1] dxs, const double[::1] dys,
                          double max_range):
    cdef Py_ssize_t nb = dxs.shape[0]
    cdef int H = logodds.shape[0]
    cdef int W = logodds.shape[1]
    seen_arr = np.zeros((H, W), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] seen = seen_arr
    cdef Walker w
    cdef Py_ssize_t k
    cdef long count = 0
    cdef double l
    with nogil:
        for k in range(nb):
            walker_init(&w, x0, y0, dxs[k], dys[k], res)
            while True:
                if w.ix < 0 or w.ix >= W or w.iy < 0 or w.iy >= H:
                    break
                l = logodds[w.iy, w.ix]
                if l > tau:
                    break
                if fabs(l) <= tau and not seen[w.iy, w.ix]:
                    seen[w.iy, w.ix] = 1
                    count += 1
                walker_step(&w)
                if w.t_in > max_range:
                    break
    return count


cdef inline double octile(int ay, int ax, int by, int bx) noexcept nogil:
    cdef int ddy = ay - by
    cdef int ddx = ax - bx
    if ddy < 0:
        ddy = -ddy
    if ddx < 0:
        ddx = -ddx
    if ddy < ddx:
        return (ddx - ddy) + SQRT2 * ddy
    return (ddy - ddx) + SQRT2 * ddx


def astar(const cnp.uint8_t[:, ::1] free, int sy, int sx, int gy, int gx):
    """8-connected A* with octile heuristic; no corner cutting.

    Returns a list of (row, col) cells from start to goal, or None.
    """
    cdef int H = free.shape[0]
    cdef int W = free.shape[1]
    if not (0 <= sy < H and 0 <= sx < W and 0 <= gy < H and 0 <= gx < W):
        return None
    if not free[sy, sx] or not free[gy, gx]:
        return None
    g_arr = np.full(H * W, np.inf)
    parent_arr = np.full(H * W, -1, dtype=np.int64)
    closed_arr = np.zeros(H * W, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef cnp.uint8_t[::1] closed = closed_arr
    cdef priority_queue[pair[double, i64]] heap
    cdef long long start = <long long>sy * W + sx
    cdef long long goal = <long long>gy * W + gx
    cdef int dys[8]
    cdef int dxs[8]
    cdef double costs[8]
    dys[:] = [-1, 1, 0, 0, -1, -1, 1, 1]
    dxs[:] = [0, 0, -1, 1, -1, 1, -1, 1]
    costs[:] = [1.0, 1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2, SQRT2]
    cdef long long cur, nxt
    cdef int cy, cx, ny, nx, k
    cdef double ng
    cdef bint found = False
    g[start] = 0.0
    heap.push(pair[double, i64](-octile(sy, sx, gy, gx), -start))
    with nogil:
        while not heap.empty():
            cur = -heap.top().second
            heap.pop()
            if closed[cur]:
                continue
            closed[cur] = 1
            if cur == goal:
                found = True
                break
            cy = <int>(cur // W)
            cx = <int>(cur % W)
            for k in range(8):
                ny = cy + dys[k]
                nx = cx + dxs[k]
                if ny < 0 or ny >= H or nx < 0 or nx >= W:
                    continue
                if not free[ny, nx]:
                    continue
                if k >= 4 and (not free[cy, nx] or not free[ny, cx]):
                    continue
                nxt = <long long>ny * W + nx
                if closed[nxt]:
                    continue
                ng = g[cur] + costs[k]
                if ng < g[nxt]:
                    g[nxt] = ng
                    parent[nxt] = cur
                    heap.push(pair[double, i64](-(ng + octile(ny, nx, gy, gx)), -nxt))
    if not found:
        return None
    path = []
    cur = goal
    while cur != -1:
        path.append((int(cur // W), int(cur % W)))
        cur = parent[cur]
    path.reverse()
    return path
