"""Product quadrature on the unit sphere S^{n-1} in hyperspherical coordinates."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import gamma, roots_jacobi

from ..config import settings
from .errors import UnsupportedDimension


def sphere_area(n: int) -> float:
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0))


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes (unit vectors) and positive weights summing to |S^{n-1}|.

    ``grid_shape`` is the tensor shape of the rule before flattening: one Gauss
    axis per polar angle and a trailing periodic azimuth axis. Neighbour
    relations along these axes are used for sign-change seeding.
    """

    dimension: int
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    grid_shape: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def degree(self) -> int:
        """Polynomial degree integrated exactly."""
        return 2 * self.level - 1

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Sum of weights * values over the node axis (the last one)."""
        return np.asarray(values) @ self.weights

    def rotated(self, rotation: np.ndarray) -> SphereQuadrature:
        return SphereQuadrature(
            dimension=self.dimension,
            level=self.level,
            nodes=self.nodes @ np.asarray(rotation).T,
            weights=self.weights,
            grid_shape=self.grid_shape,
        )


@functools.lru_cache(maxsize=16)
def _build(n: int, level: int) -> SphereQuadrature:
    azimuth = np.pi * np.arange(2 * level) / level
    azimuth_weights = np.full(2 * level, np.pi / level)
    if n == 2:
        nodes = np.stack([np.cos(azimuth), np.sin(azimuth)], axis=-1)
        return SphereQuadrature(n, level, nodes, azimuth_weights, (2 * level,))

    # polar angle i (1-based) carries the weight sin^{n-1-i}; in t = cos(phi)
    # this is the Jacobi weight (1-t^2)^{(n-2-i)/2}
    polar = []
    for i in range(1, n - 1):
        alpha = (n - 2 - i) / 2.0
        t, w = roots_jacobi(level, alpha, alpha)
        polar.append((t, w))

    grids = np.meshgrid(*[t for t, _ in polar], azimuth, indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in polar], azimuth_weights, indexing="ij")
    shape = grids[0].shape

    coords = []
    sin_product = np.ones(shape)
    for t in grids[:-1]:
        coords.append(sin_product * t)
        sin_product = sin_product * np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    coords.append(sin_product * np.cos(grids[-1]))
    coords.append(sin_product * np.sin(grids[-1]))

    nodes = np.stack(coords, axis=-1).reshape(-1, n)
    weights = functools.reduce(np.multiply, wgrids).reshape(-1)
    return SphereQuadrature(n, level, nodes, weights, shape)


def build_quadrature(
    n: int, level: Optional[int] = None, dimension_cap: Optional[int] = None
) -> SphereQuadrature:
    """Gauss-Jacobi x trapezoid product rule on S^{n-1}.

    n=2 gives 2L equispaced nodes on the circle with weights pi/L. For n >= 3
    each polar angle gets an L-point Gauss-Jacobi rule in cos(phi) and the
    azimuth a 2L-point trapezoid rule, so the node count is 2 L^{n-1}.

    Raises:
        UnsupportedDimension: If n < 2 or n exceeds the dimension cap.
    """
    cap = dimension_cap or settings.DIMENSION_CAP
    if n < 2 or n > cap:
        raise UnsupportedDimension(f"Sphere rules are available for 2 <= n <= {cap}, got n={n}")
    level = level or settings.quadrature_level(n)
    if level < 1:
        raise ValueError(f"Quadrature level must be positive, got {level}")
    quad = _build(n, int(level))
    logger.debug(f"Sphere rule n={n} level={level}: {quad.size} nodes")
    return quad


def random_rotation(n: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix with determinant +1."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
