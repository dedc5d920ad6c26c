"""Fixed-order Gauss-Legendre helpers shared by the radial and table code."""

from __future__ import annotations

import numpy as np

GL_ORDER = 10
INNER_ORDER = 6  # partial-cell integrals; cells are short enough that this is exact to rounding
_RULES = {k: np.polynomial.legendre.leggauss(k) for k in (INNER_ORDER, GL_ORDER)}
_XI, _WI = _RULES[GL_ORDER]


def gl_integrate(func, a, b, order: int = GL_ORDER):
    """Integrate ``func`` over ``[a, b]`` elementwise for array endpoints.

    ``func`` must accept an array of any shape and evaluate pointwise.
    """
    if order not in _RULES:
        _RULES[order] = np.polynomial.legendre.leggauss(order)
    xi, wi = _RULES[order]
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * xi
    return (func(x) @ wi) * half


def gl_nodes(a, b):
    """Return ``(x, w)`` with shape ``a.shape + (GL_ORDER,)`` for each interval."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _XI
    w = half[..., None] * _WI
    return x, w


def segmented_grid(breaks, total_cells: int, min_cells: int = 32) -> np.ndarray:
    """Uniform-per-segment grid over sorted ``breaks`` (endpoints included).

    Cells are distributed proportionally to segment length, with at least
    ``min_cells`` per segment so that short pieces (narrow caps) are resolved.
    """
    breaks = np.asarray(breaks, dtype=float)
    span = breaks[-1] - breaks[0]
    pieces = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        k = max(min_cells, int(np.ceil(total_cells * (hi - lo) / span)))
        pieces.append(np.linspace(lo, hi, k + 1)[:-1])
    pieces.append(breaks[-1:])
    return np.concatenate(pieces)
