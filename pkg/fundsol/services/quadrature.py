"""One-dimensional composite rules shared by the profile, bracket and radial code."""

from __future__ import annotations

import functools
from typing import Sequence, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

Rule = Tuple[np.ndarray, np.ndarray]


@functools.lru_cache(maxsize=64)
def _legendre(points: int) -> Rule:
    return roots_legendre(points)


def gauss_legendre(a: float, b: float, points: int) -> Rule:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _legendre(points)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss(breaks: Sequence[float], points: int, subdivisions: int = 1) -> Rule:
    """Gauss-Legendre on every interval between consecutive breakpoints.

    Coincident breakpoints are dropped; each interval is cut into
    ``subdivisions`` equal panels.
    """
    edges = np.unique(np.asarray(breaks, dtype=float))
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        for lo, hi in zip(np.linspace(a, b, subdivisions + 1)[:-1], np.linspace(a, b, subdivisions + 1)[1:]):
            x, w = gauss_legendre(lo, hi, points)
            nodes.append(x)
            weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def graded_rule(top: float, levels: int, points: int, ratio: float = 0.5) -> Rule:
    """Rule on (0, top] with panels [top r^{m+1}, top r^m], m < levels, plus the last panel down to 0."""
    edges = top * ratio ** np.arange(levels + 1)
    breaks = np.concatenate([[0.0], edges[::-1]])
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        x, w = gauss_legendre(a, b, points)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def gauss_jacobi_left(a: float, b: float, points: int, exponent: float) -> Rule:
    """Nodes x and weights W with sum W g(x) ~ integral over [a, b] of (x - a)^exponent g(x) dx."""
    if exponent <= -1:
        raise ValueError(f"Weight exponent must exceed -1, got {exponent}")
    # roots_jacobi(N, alpha, beta) integrates against (1-t)^alpha (1+t)^beta on [-1, 1]
    t, w = roots_jacobi(points, 0.0, exponent)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), w * half ** (exponent + 1.0)


def chebyshev_points(count: int) -> np.ndarray:
    """Chebyshev points of the first kind on [-1, 1], descending."""
    return np.cos(np.pi * (np.arange(count) + 0.5) / count)
