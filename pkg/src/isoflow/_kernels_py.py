"""Pure-Python reference kernels.

Same call signatures as the compiled ``_ckernels`` module; selected by
:mod:`isoflow.kernels` when the extension is unavailable or when
``ISOFLOW_PURE_PYTHON=1`` is set.

All root sums go through :func:`math.fsum`, so results are correctly rounded
per component.
"""
import math

import numpy as np

EUCLIDEAN = 0
SPHERICAL = 1

# Dormand-Prince 5(4) tableau.
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def root_sums(roots, mult, x):
    """Return ``(sum_i m_i a_i / <x,a_i>, sum_i m_i / <x,a_i>**2, margin, wall)``.

    ``margin`` is ``min_i <x, a_i>`` and ``wall`` the index attaining it. When
    the margin is not positive the sums are returned as NaN.
    """
    roots = np.asarray(roots, dtype=float)
    x = np.asarray(x, dtype=float)
    g, k = roots.shape
    ip = [math.fsum(roots[i, j] * x[j] for j in range(k)) for i in range(g)]
    wall = min(range(g), key=ip.__getitem__)
    margin = ip[wall]
    if not margin > 0.0:
        return np.full(k, np.nan), math.nan, margin, wall
    w = [mult[i] / ip[i] for i in range(g)]
    s = np.array([math.fsum(w[i] * roots[i, j] for i in range(g)) for j in range(k)])
    a2 = math.fsum(mult[i] / (ip[i] * ip[i]) for i in range(g))
    return s, a2, margin, wall


def field(kind, roots, mult, n, x):
    """Velocity of the chamber flow at ``x``.

    Euclidean: ``H^E(x)``. Spherical: ``H^S(x)`` with any residual radial
    component projected out. Returns NaNs outside the chamber.
    """
    s, _, margin, _ = root_sums(roots, mult, x)
    v = -s
    if not margin > 0.0:
        return v
    if kind == SPHERICAL:
        x = np.asarray(x, dtype=float)
        rr = math.fsum(xi * xi for xi in x)
        v = v + (n / rr) * x
        v = v - (math.fsum(v * x) / rr) * x
    return v


def dp5_step(kind, roots, mult, n, x, f0, h, rtol, atol):
    """One Dormand-Prince step from ``x`` with slope ``f0``.

    Returns ``(x_new, f_new, K, err)`` where ``K`` holds the seven stage
    slopes (rows) for dense output and ``err`` is the RMS scaled error
    estimate. ``err`` is ``inf`` if any stage left the chamber.
    """
    x = np.asarray(x, dtype=float)
    K = np.empty((7, x.size))
    K[0] = f0
    for s in range(1, 6):
        dx = np.zeros_like(x)
        for j, a in enumerate(A[s]):
            dx += a * K[j]
        K[s] = field(kind, roots, mult, n, x + h * dx)
    dx = np.zeros_like(x)
    for j, b in enumerate(B):
        dx += b * K[j]
    x_new = x + h * dx
    K[6] = field(kind, roots, mult, n, x_new)
    if not np.all(np.isfinite(K)):
        return x_new, K[6], K, math.inf
    err_vec = h * (E @ K)
    scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
    err = math.sqrt(np.mean((err_vec / scale) ** 2))
    return x_new, K[6].copy(), K, err
