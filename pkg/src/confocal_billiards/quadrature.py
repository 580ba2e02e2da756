"""Double-exponential quadrature for the hyperelliptic period integrals.

The integrands are s^k / sqrt(P(s)) over an interval whose endpoints are
(near-)roots of P, so they carry inverse-square-root endpoint
singularities.  The tanh-sinh substitution kills those, and the node
offsets from the endpoints are propagated exactly so the integrand can
be evaluated without catastrophic cancellation even when another root of
P sits 1e-5 outside the interval.
"""

from __future__ import annotations

import math

import numpy as np

_T_MAX = 4.0


def _nodes(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """tanh-sinh abscissae x in (-1,1), weights, and stable 1-|x|."""
    h = 2.0 ** (-level)
    k = np.arange(-int(_T_MAX / h), int(_T_MAX / h) + 1)
    t = k * h
    u = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(u)
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    e = np.exp(-2.0 * np.abs(u))
    delta = 2.0 * e / (1.0 + e)
    return x, w, delta


def period_integrals(alpha: float, beta: float, roots, powers,
                     tol: float = 1e-12, max_level: int = 9) -> tuple[np.ndarray, float]:
    """(integrals of s^k / sqrt(P(s)) over [alpha, beta] for k in powers, error).

    ``roots`` are all roots of P; P must be positive on the open interval
    and every root must lie outside it (interval endpoints allowed).
    """
    roots = np.asarray(roots, dtype=float)
    if np.any((roots > alpha + 0.0) & (roots < beta - 0.0)):
        raise ValueError("a root lies strictly inside the integration interval")
    r = 0.5 * (beta - alpha)
    mid = 0.5 * (beta + alpha)
    lo_off = alpha - roots[roots <= alpha]      # >= 0
    hi_off = roots[roots >= beta] - beta        # >= 0
    prev = None
    err = math.inf
    for level in range(3, max_level + 1):
        x, w, delta = _nodes(level)
        dleft = r * np.where(x < 0.0, delta, 1.0 + x)
        dright = r * np.where(x > 0.0, delta, 1.0 - x)
        s = mid + r * x
        prod = np.ones_like(s)
        for off in lo_off:
            prod *= off + dleft
        for off in hi_off:
            prod *= off + dright
        base = w / np.sqrt(prod)
        vals = np.array([r * np.sum(base * s ** k) for k in powers])
        if prev is not None:
            err = float(np.max(np.abs(vals - prev)))
            scale = float(np.max(np.abs(vals))) or 1.0
            if err <= tol * max(1.0, scale):
                return vals, err
        prev = vals
    return prev, err
