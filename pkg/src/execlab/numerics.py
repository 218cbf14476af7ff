"""Small 1-D search helpers shared by the optimizers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.optimize import bisect

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float, xtol: float, max_iter: int = 200):
    """Golden-section search for a maximum of f on [lo, hi].

    Returns (x, f(x)) for the best point seen, endpoints included, so a
    monotone f still yields the right boundary.
    """
    a, b = float(lo), float(hi)
    best_x, best_f = a, f(a)
    fb = f(b)
    if fb > best_f:
        best_x, best_f = b, fb
    c = b - INV_PHI * (b - a)
    e = a + INV_PHI * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + INV_PHI * (b - a)
            fe = f(e)
    for x, fx in ((c, fc), (e, fe)):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def grid_then_golden(
    f_vec: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    points: int,
    xtol: float,
):
    """Maximize on a uniform grid, then refine between the best point's neighbours."""
    if hi <= lo:
        x = np.array([lo])
        return float(lo), float(f_vec(x)[0])
    grid = np.linspace(lo, hi, points)
    values = f_vec(grid)
    i = int(np.argmax(values))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, points - 1)]
    x, fx = golden_max(lambda v: float(f_vec(np.array([v]))[0]), left, right, xtol)
    if values[i] >= fx:
        return float(grid[i]), float(values[i])
    return x, fx


def bisect_root(g: Callable[[float], float], lo: float, hi: float, xtol: float) -> float:
    return float(bisect(g, lo, hi, xtol=xtol, maxiter=500))
