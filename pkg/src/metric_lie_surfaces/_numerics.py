"""Small numerical kernels shared by the geometry modules.

Grid differentiation, point-wise finite differences of callables, cubic
interpolation along grid lines and the closed-form exponential of the
Lie algebra so(3) / so(2,1).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

# 4th-order first-derivative stencils: central, and one-sided for the two
# boundary bands (offsets relative to the evaluation point).
_CENTRAL = (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0)
_EDGE0 = (np.arange(5), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0)
_EDGE1 = (np.arange(-1, 4), np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0)


def grid_diff(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order derivative of gridded samples along ``axis``.

    Interior points use the five-point central stencil; the first and last
    two points use one-sided fourth-order stencils, so the output has the
    same shape as ``f``.
    """
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    n = f.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 samples along axis {axis}, got {n}")
    out = np.empty_like(f)
    offs, w = _CENTRAL
    out[2:n - 2] = sum(wk * f[2 + o:n - 2 + o] for o, wk in zip(offs, w))
    offs, w = _EDGE0
    out[0] = sum(wk * f[o] for o, wk in zip(offs, w))
    out[n - 1] = -sum(wk * f[n - 1 - o] for o, wk in zip(offs, w))
    offs, w = _EDGE1
    out[1] = sum(wk * f[1 + o] for o, wk in zip(offs, w))
    out[n - 2] = -sum(wk * f[n - 2 - o] for o, wk in zip(offs, w))
    return np.moveaxis(out / h, 0, axis)


def grid_diff2(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order second derivative along ``axis`` (one-sided at the edges)."""
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    n = f.shape[0]
    if n < 6:
        raise ValueError(f"need at least 6 samples along axis {axis}, got {n}")
    out = np.empty_like(f)
    w = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    out[2:n - 2] = sum(wk * f[k:n - 4 + k] for k, wk in enumerate(w))
    # six-point one-sided stencil, exact for quintics
    we = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
    w1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0
    out[0] = sum(wk * f[k] for k, wk in enumerate(we))
    out[n - 1] = sum(wk * f[n - 1 - k] for k, wk in enumerate(we))
    out[1] = sum(wk * f[k] for k, wk in enumerate(w1))
    out[n - 2] = sum(wk * f[n - 1 - k] for k, wk in enumerate(w1))
    return np.moveaxis(out / h ** 2, 0, axis)


def fd_first(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
             direction: np.ndarray, step: float) -> np.ndarray:
    """Directional derivative of ``fun`` at ``x`` with the 4th-order central stencil."""
    offs, w = _CENTRAL
    return sum(wk * fun(x + o * step * direction) for o, wk in zip(offs, w)) / step


def fd_partials(fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
                u: np.ndarray, v: np.ndarray, step: float):
    """First and second partials of a vectorised chart ``fun(u, v)``.

    Returns ``(f_u, f_v, f_uu, f_uv, f_vv)`` computed with 4th-order central
    stencils of width ``step``.
    """
    offs, w = _CENTRAL
    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    o2 = np.arange(-2, 3)
    fu = sum(wk * fun(u + o * step, v) for o, wk in zip(offs, w)) / step
    fv = sum(wk * fun(u, v + o * step) for o, wk in zip(offs, w)) / step
    fuu = sum(wk * fun(u + o * step, v) for o, wk in zip(o2, w2)) / step ** 2
    fvv = sum(wk * fun(u, v + o * step) for o, wk in zip(o2, w2)) / step ** 2
    fuv = sum(
        wi * wj * fun(u + oi * step, v + oj * step)
        for oi, wi in zip(offs, w) for oj, wj in zip(offs, w)
    ) / step ** 2
    return fu, fv, fuu, fuv, fvv


def cubic_midpoints(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    """Values halfway between consecutive samples by 4-point Lagrange interpolation.

    The output has one fewer entry than ``samples`` along ``axis``. Near the
    ends the stencil is shifted inward so it stays 4th-order accurate.
    """
    f = np.moveaxis(np.asarray(samples, dtype=float), axis, 0)
    n = f.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    if n < 4:
        return np.moveaxis(0.5 * (f[1:] + f[:-1]), 0, axis)
    out = np.empty((n - 1,) + f.shape[1:])
    # interior: nodes k-1, k, k+1, k+2 evaluated at k + 1/2
    out[1:n - 2] = (-f[0:n - 3] + 9.0 * f[1:n - 2] + 9.0 * f[2:n - 1] - f[3:n]) / 16.0
    # first interval: nodes 0..3 at 1/2
    out[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    # last interval: nodes n-4..n-1 at n - 3/2
    out[n - 2] = (f[n - 4] - 5.0 * f[n - 3] + 15.0 * f[n - 2] + 5.0 * f[n - 1]) / 16.0
    return np.moveaxis(out, 0, axis)


def _series_weights(q: np.ndarray):
    """Return sin(sqrt q)/sqrt q and (1-cos sqrt q)/q, analytic in q of either sign."""
    q = np.asarray(q, dtype=float)
    f1 = np.empty_like(q)
    f2 = np.empty_like(q)
    small = np.abs(q) < 1e-4
    qs = q[small]
    f1[small] = 1.0 - qs / 6.0 + qs ** 2 / 120.0 - qs ** 3 / 5040.0
    f2[small] = 0.5 - qs / 24.0 + qs ** 2 / 720.0 - qs ** 3 / 40320.0
    pos = (~small) & (q > 0)
    r = np.sqrt(q[pos])
    f1[pos] = np.sin(r) / r
    f2[pos] = (1.0 - np.cos(r)) / q[pos]
    neg = (~small) & (q < 0)
    r = np.sqrt(-q[neg])
    f1[neg] = np.sinh(r) / r
    f2[neg] = (np.cosh(r) - 1.0) / (-q[neg])
    return f1, f2


def expm_so_eps(A: np.ndarray) -> np.ndarray:
    """Closed-form exponential of (stacks of) 3x3 matrices in so_3^eps.

    Such matrices satisfy A^3 = -q A with q = -tr(A^2)/2, so
    exp(A) = I + f1(q) A + f2(q) A^2.
    """
    A = np.asarray(A, dtype=float)
    A2 = A @ A
    q = -0.5 * np.trace(A2, axis1=-2, axis2=-1)
    f1, f2 = _series_weights(q)
    return np.eye(3) + f1[..., None, None] * A + f2[..., None, None] * A2


def eps_gram_schmidt(M: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Re-orthonormalise the columns of ``M`` for the form diag(eps).

    Column j is rescaled to eps-norm ``eps[j]`` and made orthogonal to the
    previous columns; signs of the columns are preserved.
    """
    eps = np.asarray(eps, dtype=float)
    cols = [M[..., :, j].copy() for j in range(3)]
    out = []
    for j in range(3):
        c = cols[j]
        for k, b in enumerate(out):
            c = c - (np.sum(eps * c * b, axis=-1) * eps[k])[..., None] * b
        nrm = np.sum(eps * c * c, axis=-1)
        c = c / np.sqrt(np.abs(nrm))[..., None]
        out.append(c)
    return np.stack(out, axis=-1)


def euclid_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b)
