"""Distributional brackets of Leray profiles against singular kernels in u.

The log bracket is B_j(h) = <log^j|u| ; L(h)'(u)> = -p.v. integral of
k_j(u) L(h)(u) du with k_j = (log^j|u|)' = j log^{j-1}|u| / u. Against the
blended profile measure it splits into a window part, handled through the
Chebyshev fit and a cutoff chi around u = 0, and a Stieltjes part over the
node staircase:

    B_j = sum_c a_c mu_c - sum_i tau(p_i) k_j(p_i) w_i h_i

    mu_c = integral chi log^j|u| T_c'(u/eps)/eps du
           - integral over rho/2 <= |u| <= eps of g'(u) (1 - tau(u)) T_c(u/eps) du,
    g'   = ((1 - chi) log^j|u|)' = -chi' log^j|u| + (1 - chi) k_j.

The first integral carries the log singularity and uses a graded mesh; the
value does not depend on rho.
"""

from __future__ import annotations

import csv
import functools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from numpy.polynomial import chebyshev

from ..schemas.run import LogBracketSpec
from .errors import NonfiniteProfile, WindowTooSmall
from .leray import LerayFamily, LerayProfile, window_blend
from .quadrature import composite_gauss, gauss_jacobi_left, graded_rule
from .testfn import SpectralFunction

CUTOFF_SHAPE = "quintic-smootherstep"
_BLEND_POINTS = 16
_BLEND_SUBPANELS = 8


@dataclass(frozen=True)
class Cutoff:
    """chi = 1 on |u| <= rho/2, 1 - s^3 (10 - 15 s + 6 s^2) with s = (2|u| - rho)/rho up to rho, 0 beyond."""

    rho: float
    shape: str = CUTOFF_SHAPE

    def _s(self, u: np.ndarray) -> np.ndarray:
        return np.clip((2.0 * np.abs(u) - self.rho) / self.rho, 0.0, 1.0)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        s = self._s(np.asarray(u, dtype=float))
        return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)

    def derivative(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = self._s(u)
        return -30.0 * s * s * (1.0 - s) ** 2 * (2.0 / self.rho) * np.sign(u)


def log_power(u: np.ndarray, power: int) -> np.ndarray:
    return np.log(np.abs(u)) ** power


def log_kernel(u: np.ndarray, power: int) -> np.ndarray:
    """k_j(u) = d/du log^j|u|."""
    return power * np.log(np.abs(u)) ** (power - 1) / u


class BracketKernel(ABC):
    """A singular kernel K with a bracket linear in the profile.

    bracket(profile) = sum_c a_c moments[c] + sum over atoms of tau(p) outer(p) mass.
    """

    name: str

    @abstractmethod
    def moments(self, epsilon: float, degree: int) -> np.ndarray:
        """Window contributions of the Chebyshev polynomials T_c(u/eps), c = 0..degree."""

    @abstractmethod
    def outer(self, u: np.ndarray) -> np.ndarray:
        """Weight paired with tau dA away from the window core."""

    def pair(self, profile: LerayProfile) -> complex:
        if not (np.all(np.isfinite(profile.coefficients)) and np.all(np.isfinite(profile.masses))):
            raise NonfiniteProfile("Profile holds non-finite values")
        mu = self.moments(profile.epsilon, profile.coefficients.size - 1)
        tau = window_blend(profile.atoms, profile.epsilon)
        far = np.sum(tau * self.outer(profile.atoms) * profile.masses)
        return complex(mu @ profile.coefficients + far)


class LogKernel(BracketKernel):
    """k = <log^j|u| ; . '> regularised per ``LogBracketSpec``."""

    def __init__(self, spec: LogBracketSpec, epsilon: float):
        self.spec = spec
        self.power = spec.power
        self.epsilon = epsilon
        self.rho = spec.rho if spec.rho is not None else spec.cutoff_fraction * epsilon
        if self.rho > 0.5 * epsilon * (1.0 + 1e-12):
            raise WindowTooSmall(
                f"Cutoff radius rho={self.rho:.4g} needs a fitted core of half-width {self.rho:.4g}, "
                f"but the window only certifies |u| <= {0.5 * epsilon:.4g}"
            )
        self.cutoff = Cutoff(self.rho)
        self.name = f"log^{self.power}"

    def outer(self, u: np.ndarray) -> np.ndarray:
        safe = np.where(u == 0, 1.0, u)
        return np.where(u == 0, 0.0, -log_kernel(safe, self.power))

    def moments(self, epsilon: float, degree: int) -> np.ndarray:
        if epsilon != self.epsilon:
            return LogKernel(self.spec, epsilon).moments(epsilon, degree)
        return _log_moments(
            self.power,
            self.rho,
            self.epsilon,
            degree,
            self.spec.log_panels,
            self.spec.log_gauss_points,
            self.spec.outer_gauss_points,
        )


@functools.lru_cache(maxsize=128)
def _log_moments(
    power: int, rho: float, epsilon: float, degree: int, panels: int, points: int, outer_points: int
) -> np.ndarray:
    cutoff = Cutoff(rho)
    x, w = graded_rule(rho, panels, points)
    inner_u = np.concatenate([-x, x])
    inner_w = np.concatenate([w, w])
    outer_u, outer_w = composite_gauss([0.5 * rho, rho, 0.5 * epsilon, epsilon], outer_points, 8)
    outer_u = np.concatenate([-outer_u, outer_u])
    outer_w = np.concatenate([outer_w, outer_w])

    g_prime = -cutoff.derivative(outer_u) * log_power(outer_u, power) + (1.0 - cutoff(outer_u)) * log_kernel(
        outer_u, power
    )
    outer_weight = outer_w * g_prime * (1.0 - window_blend(outer_u, epsilon))
    inner_weight = inner_w * cutoff(inner_u) * log_power(inner_u, power) / epsilon

    mu = np.empty(degree + 1)
    for c in range(degree + 1):
        unit = np.zeros(degree + 1)
        unit[c] = 1.0
        d_unit = chebyshev.chebder(unit)
        inner = inner_weight @ chebyshev.chebval(inner_u / epsilon, d_unit) if c > 0 else 0.0
        mu[c] = inner - outer_weight @ chebyshev.chebval(outer_u / epsilon, unit)
    return mu


class PowerKernel(BracketKernel):
    """<|u|^{2 zeta - 1} sgn u , L(u)>, integrable for zeta > 0; only the odd part of the fit contributes."""

    def __init__(self, zeta: float, jacobi_points: int = 48):
        if zeta <= 0:
            raise ValueError(f"The power kernel needs zeta > 0, got {zeta}")
        self.zeta = zeta
        self.exponent = 2.0 * zeta - 1.0
        self.jacobi_points = jacobi_points
        self.name = f"|u|^{self.exponent:.4g} sgn u"

    def outer(self, u: np.ndarray) -> np.ndarray:
        safe = np.where(u == 0, 1.0, np.abs(u))
        return np.sign(u) * safe**self.exponent

    def moments(self, epsilon: float, degree: int) -> np.ndarray:
        half = 0.5 * epsilon
        u0, w0 = gauss_jacobi_left(0.0, half, self.jacobi_points, self.exponent)
        u1, w1 = composite_gauss([half, epsilon], _BLEND_POINTS, _BLEND_SUBPANELS)
        w1 = w1 * u1**self.exponent * (1.0 - window_blend(u1, epsilon))
        u = np.concatenate([u0, u1])
        w = np.concatenate([w0, w1])
        mu = np.zeros(degree + 1)
        for c in range(1, degree + 1, 2):
            unit = np.zeros(degree + 1)
            unit[c] = 1.0
            mu[c] = 2.0 * (w @ chebyshev.chebval(u / epsilon, unit))
        return mu


class LorentzKernel(BracketKernel):
    """a u / (a^2 u^2 + delta^2), the regularised 1/(a u); a graded rule follows the peak at u = delta/a."""

    def __init__(self, scale: float, delta: float, levels: int = 40, points: int = 16):
        if scale <= 0 or delta <= 0:
            raise ValueError(f"The Lorentz kernel needs scale > 0 and delta > 0, got {scale}, {delta}")
        self.scale = scale
        self.delta = delta
        self.levels = levels
        self.points = points
        self.name = f"lorentz(a={scale:.4g}, delta={delta:.4g})"

    def outer(self, u: np.ndarray) -> np.ndarray:
        a = self.scale
        return a * u / (a * a * u * u + self.delta**2)

    def moments(self, epsilon: float, degree: int) -> np.ndarray:
        half = 0.5 * epsilon
        u0, w0 = graded_rule(half, self.levels, self.points)
        u1, w1 = composite_gauss([half, epsilon], _BLEND_POINTS, _BLEND_SUBPANELS)
        w1 = w1 * (1.0 - window_blend(u1, epsilon))
        u = np.concatenate([u0, u1])
        w = np.concatenate([w0, w1]) * self.outer(u)
        mu = np.zeros(degree + 1)
        for c in range(1, degree + 1, 2):
            unit = np.zeros(degree + 1)
            unit[c] = 1.0
            mu[c] = 2.0 * (w @ chebyshev.chebval(u / epsilon, unit))
        return mu


def log_bracket(profile: LerayProfile, spec: Optional[LogBracketSpec] = None) -> complex:
    """<log^j|u| ; L'(u)> for one profile.

    Raises:
        WindowTooSmall: If rho > eps/2.
        NonfiniteProfile: If the profile holds NaN or inf.
    """
    spec = spec or LogBracketSpec()
    value = LogKernel(spec, profile.epsilon).pair(profile)
    logger.debug(f"log^{spec.power} bracket of {profile.label}: {value:.10g} (fit residual {profile.residual:.2e})")
    return value


class BracketFunctional:
    """A bracket as a weighted point set on the sphere: B(h) = sum_i c_i h(points_i).

    Built once per (family, kernel); evaluating it for many h is a matrix product.
    """

    def __init__(self, family: LerayFamily, kernel: BracketKernel):
        self.family = family
        self.kernel = kernel
        mu = kernel.moments(family.epsilon, family.fit_degree)
        c = np.zeros(family.points.shape[0])
        c[family.fit_index] += mu @ family.fit_matrix
        p = family.values
        c[: family.node_count] += window_blend(p, family.epsilon) * kernel.outer(p) * family.weights
        self.coefficients = c

    @property
    def points(self) -> np.ndarray:
        return self.family.points

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Apply to values of shape (..., M) at ``points``."""
        return np.asarray(values) @ self.coefficients


@dataclass
class BracketScan:
    """Bracket values of h_r(theta) = f^(r theta) over a radius grid."""

    radii: np.ndarray
    values: Dict[int, np.ndarray] = field(default_factory=dict)

    def to_csv(self, path: Union[Path, str]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        powers = sorted(self.values)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r"] + [f"bracket_j{j}" for j in powers] + [f"bracket_j{j}_imag" for j in powers])
            for i, r in enumerate(self.radii):
                writer.writerow(
                    [f"{r:.12g}"]
                    + [f"{np.real(self.values[j][i]):.12g}" for j in powers]
                    + [f"{np.imag(self.values[j][i]):.12g}" for j in powers]
                )
        return path


def log_bracket_scan(
    family: LerayFamily,
    f: SpectralFunction,
    radii: Sequence[float],
    powers: Sequence[int] = (1, 2),
    spec: Optional[LogBracketSpec] = None,
) -> BracketScan:
    """Brackets of h_r = f^(r .) at every radius, reusing the node data of ``family``."""
    spec = spec or LogBracketSpec()
    functionals: List[BracketFunctional] = [
        BracketFunctional(family, LogKernel(spec.model_copy(update={"power": j}), family.epsilon))
        for j in powers
    ]
    ray = f.ray(family.points)
    radii = np.asarray(radii, dtype=float)
    table = {j: np.empty(radii.size, dtype=complex) for j in powers}
    for i, r in enumerate(radii):
        h = ray.derivatives(float(r), 0)[0]
        for j, functional in zip(powers, functionals):
            table[j][i] = functional(h)
    logger.info(f"Bracket scan over {radii.size} radii, powers {tuple(powers)}")
    return BracketScan(radii=radii, values=table)
