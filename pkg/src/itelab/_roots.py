"""Lock-step bracketed root refinement for vectorised scalar functions."""

from __future__ import annotations

from typing import Callable

import numpy as np


def refine_brackets(
    func: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    fa: np.ndarray | None = None,
    fb: np.ndarray | None = None,
    xtol: np.ndarray | float = 0.0,
    maxiter: int = 200,
) -> np.ndarray:
    """Shrink every bracket ``[a_i, b_i]`` around a sign change of ``func``.

    All brackets advance together, so ``func`` is called once per
    iteration on the whole active set.  Each iteration tries a secant
    (false-position) point and falls back to bisection when the secant
    lands too close to an end or the bracket stalls.  Iteration stops once
    the width is below ``xtol`` plus a few ulps.
    """
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    if a.size == 0:
        return a
    fa = func(a) if fa is None else np.asarray(fa, dtype=float).copy()
    fb = func(b) if fb is None else np.asarray(fb, dtype=float).copy()
    if np.any(np.sign(fa) * np.sign(fb) > 0):
        raise ValueError("every bracket must straddle a sign change")
    tol = np.broadcast_to(np.asarray(xtol, dtype=float), a.shape) + 8e-16 * np.maximum(np.abs(a), np.abs(b))
    root = np.where(fa == 0.0, a, np.where(fb == 0.0, b, np.nan))
    active = np.isnan(root)
    width0 = np.abs(b - a)
    it = 0
    while np.any(active) and it < maxiter:
        it += 1
        idx = np.nonzero(active)[0]
        aa, bb, ffa, ffb = a[idx], b[idx], fa[idx], fb[idx]
        w = bb - aa
        with np.errstate(divide="ignore", invalid="ignore"):
            c = bb - ffb * w / (ffb - ffa)
        frac = (c - aa) / w
        bad = ~np.isfinite(frac) | (frac < 0.02) | (frac > 0.98) | (it % 4 == 0)
        bad |= np.abs(w) > 0.5 * width0[idx]
        c = np.where(bad, 0.5 * (aa + bb), c)
        fc = func(c)
        hit = fc == 0.0
        left = (np.sign(fc) == np.sign(ffa)) & ~hit
        a[idx] = np.where(left, c, aa)
        fa[idx] = np.where(left, fc, ffa)
        b[idx] = np.where(left | hit, bb, c)
        fb[idx] = np.where(left | hit, ffb, fc)
        width0[idx] = np.where(bad, np.abs(w), width0[idx])
        done = hit | (np.abs(b[idx] - a[idx]) <= tol[idx])
        root[idx] = np.where(hit, c, np.where(done, 0.5 * (a[idx] + b[idx]), np.nan))
        active[idx] = ~done
    leftover = np.isnan(root)
    root[leftover] = 0.5 * (a[leftover] + b[leftover])
    return root
