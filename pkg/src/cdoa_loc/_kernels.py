"""Compiled inner loops."""

import math

import numpy as np
from numba import njit

_PI = math.pi
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def accumulate_lattice_loglik(table, row_off, col_off, measured, ny, nx, inv_two_var, log_norm, out):
    """Add Gaussian log-densities of wrapped bearing errors to ``out`` (ny, nx).

    ``table[s, r, c]`` holds the expected bearing of sensor ``s`` at lattice
    node (r, c); window entry ``k`` reads the block starting at
    (row_off[k], col_off[k]). NaN on either side skips the term.
    """
    n_entries, n_sensors = measured.shape
    for k in range(n_entries):
        r0 = row_off[k]
        c0 = col_off[k]
        for s in range(n_sensors):
            m = measured[k, s]
            if math.isnan(m):
                continue
            for r in range(ny):
                for c in range(nx):
                    e = table[s, r0 + r, c0 + c]
                    if math.isnan(e):
                        continue
                    d = m - e
                    if d > _PI:
                        d -= _TWO_PI
                    elif d <= -_PI:
                        d += _TWO_PI
                    out[r, c] -= d * d * inv_two_var + log_norm
    return out


@njit(cache=True)
def _range_cost(px, py, anchors, d):
    c = 0.0
    for i in range(anchors.shape[0]):
        r = math.hypot(px - anchors[i, 0], py - anchors[i, 1]) - d[i]
        c += r * r
    return c


@njit(cache=True)
def gauss_newton_ranges(anchors, d, x0, y0, max_iter, step_tol):
    """Levenberg-damped Gauss-Newton for sum_i (|p - a_i| - d_i)^2.

    Returns (x, y, cost, iterations, converged).
    """
    px, py = x0, y0
    cost = _range_cost(px, py, anchors, d)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        a11 = 0.0
        a12 = 0.0
        a22 = 0.0
        g1 = 0.0
        g2 = 0.0
        for i in range(anchors.shape[0]):
            dx = px - anchors[i, 0]
            dy = py - anchors[i, 1]
            rho = max(math.hypot(dx, dy), 1e-12)
            jx = dx / rho
            jy = dy / rho
            r = rho - d[i]
            a11 += jx * jx
            a12 += jx * jy
            a22 += jy * jy
            g1 += jx * r
            g2 += jy * r
        while True:
            b11 = a11 + lam * (a11 + 1e-12)
            b22 = a22 + lam * (a22 + 1e-12)
            det = b11 * b22 - a12 * a12
            if det != 0.0 and math.isfinite(det):
                sx = -(b22 * g1 - a12 * g2) / det
                sy = -(b11 * g2 - a12 * g1) / det
            else:
                sx = -g1
                sy = -g2
            tcost = _range_cost(px + sx, py + sy, anchors, d)
            if tcost <= cost:
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e12:
                return px, py, cost, it, True
        px += sx
        py += sy
        cost = tcost
        if math.hypot(sx, sy) < step_tol:
            return px, py, cost, it, True
    return px, py, cost, max_iter, False


@njit(cache=True)
def sensor_window_loglik(points, shifts, measured, nodes, stencils, min_d2, inv_two_var, log_norm, out):
    """Windowed log-likelihood of per-sensor bearings for every point.

    ``stencils[s]`` is a (2, N) matrix mapping the -ln d^2 field at the N
    nodes to sensor ``s``'s gradient. Each window entry ``k`` evaluates the
    point moved back by ``shifts[k]``. Undefined bearings skip the term.
    """
    n_pts = points.shape[0]
    n_entries, n_sensors = measured.shape
    n_nodes = nodes.shape[0]
    f = np.empty(n_nodes)
    for p in range(n_pts):
        acc = 0.0
        for k in range(n_entries):
            hx = points[p, 0] - shifts[k, 0]
            hy = points[p, 1] - shifts[k, 1]
            for i in range(n_nodes):
                dx = hx - nodes[i, 0]
                dy = hy - nodes[i, 1]
                f[i] = -math.log(max(dx * dx + dy * dy, min_d2))
            for s in range(n_sensors):
                m = measured[k, s]
                if math.isnan(m):
                    continue
                gx = 0.0
                gy = 0.0
                for i in range(n_nodes):
                    gx += stencils[s, 0, i] * f[i]
                    gy += stencils[s, 1, i] * f[i]
                if gx == 0.0 and gy == 0.0:
                    continue
                d = m - math.atan2(gy, gx)
                if d > _PI:
                    d -= _TWO_PI
                elif d <= -_PI:
                    d += _TWO_PI
                acc -= d * d * inv_two_var + log_norm
        out[p] = acc
    return out
