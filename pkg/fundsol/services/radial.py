"""Radial functionals of bracket scans F(r) = B(f^(r .)).

r-derivatives never come from differencing numerics: since the bracket acts
on theta only, F^{(m)}(r) = B(d_r^m f^(r theta)), and the ray derivatives of
the spectral test functions are closed-form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb, factorial
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..config import settings
from ..schemas.run import Budgets
from .errors import NonintegrableAssembly, OrderCapExceeded, TailNotCertified
from .pairing import BracketFunctional
from .polynomial import multi_indices, multinomial
from .quadrature import composite_gauss
from .testfn import SpectralFunction

# (r, order) -> array (channels, order + 1) of F^{(m)}(r), m = 0..order
DerivativeSampler = Callable[[float, int], np.ndarray]


def radial_truncation(sigma: float, digits: Optional[int] = None) -> float:
    """R with exp(-sigma^2 R^2 / 2) far below 10^-digits: R = (sigma^2/2)^{-1/2} sqrt(2 digits ln 10)."""
    digits = digits or settings.TAIL_DIGITS
    return float(np.sqrt(2.0) / sigma * np.sqrt(2.0 * digits * np.log(10.0)))


@dataclass(frozen=True)
class RadialGrid:
    """Geometric panels below r_core, uniform panels up to R, and an analytic head on [0, r_head]."""

    nodes: np.ndarray
    weights: np.ndarray
    r_head: float
    r_core: float
    radius: float

    @classmethod
    def build(
        cls, sigma_bounds: Tuple[float, float], budgets: Optional[Budgets] = None
    ) -> RadialGrid:
        budgets = budgets or Budgets()
        sigma_min, sigma_max = sigma_bounds
        radius = radial_truncation(sigma_min, budgets.tail_digits)
        r_core = budgets.radial_core / sigma_max
        decades = budgets.radial_decades
        per_decade = budgets.radial_panels_per_decade
        geometric = r_core * 10.0 ** (np.arange(decades * per_decade + 1) / per_decade - decades)
        x0, w0 = composite_gauss(geometric, budgets.radial_graded_points)
        x1, w1 = composite_gauss(
            np.linspace(r_core, radius, budgets.radial_uniform_panels + 1), budgets.radial_uniform_points
        )
        grid = cls(
            nodes=np.concatenate([x0, x1]),
            weights=np.concatenate([w0, w1]),
            r_head=float(geometric[0]),
            r_core=float(r_core),
            radius=float(radius),
        )
        logger.debug(f"Radial grid: {grid.nodes.size} nodes, r_core={r_core:.4g}, R={radius:.4g}")
        return grid

    def head(self, power: int, log: bool = False) -> float:
        """Integral over [0, r_head] of r^power (times log r if ``log``)."""
        d = self.r_head
        a = power + 1.0
        if not log:
            return d**a / a
        return d**a * (np.log(d) / a - 1.0 / (a * a))


@dataclass
class RadialScan:
    """F^{(m)}(r) for m = 0..order on a radial grid, plus the values at r = 0 and r = R."""

    grid: RadialGrid
    order: int
    values: np.ndarray
    at_zero: np.ndarray
    at_tail: np.ndarray
    channels: Tuple[str, ...]

    @classmethod
    def build(
        cls,
        sampler: DerivativeSampler,
        grid: RadialGrid,
        order: int,
        channels: Sequence[str] = ("F",),
        tail_tolerance: Optional[float] = None,
    ) -> RadialScan:
        """Sample the derivatives and certify the truncation.

        Raises:
            TailNotCertified: If some |F^{(m)}(R)| exceeds the tail tolerance relative to its grid maximum.
        """
        tol = settings.TAIL_TOLERANCE if tail_tolerance is None else tail_tolerance

        def sample(r: float) -> np.ndarray:
            return np.atleast_2d(np.asarray(sampler(r, order)))

        values = np.stack([sample(float(r)) for r in grid.nodes], axis=-1)
        scan = cls(
            grid=grid,
            order=order,
            values=values,
            at_zero=sample(0.0),
            at_tail=sample(grid.radius),
            channels=tuple(channels),
        )
        scale = np.max(np.abs(values), axis=-1)
        # orders that vanish to rounding are not certified against their own noise
        live = scale > 1e-12 * np.max(scale, axis=-1, keepdims=True)
        bad = live & (np.abs(scan.at_tail) > tol * scale)
        if np.any(bad):
            c, m = np.argwhere(bad)[0]
            raise TailNotCertified(
                f"|F^({m})(R)| = {abs(scan.at_tail[c, m]):.3e} for channel {scan.channels[c]} "
                f"exceeds {tol:.1e} x {scale[c, m]:.3e} at R={grid.radius:.4g}"
            )
        logger.info(f"Radial scan: {grid.nodes.size} radii, orders 0..{order}, channels {scan.channels}")
        return scan

    def index(self, channel: Union[int, str]) -> int:
        return channel if isinstance(channel, int) else self.channels.index(channel)

    def derivative(self, m: int, channel: Union[int, str] = 0) -> np.ndarray:
        if m > self.order:
            raise OrderCapExceeded(f"Scan holds orders up to {self.order}, asked for {m}")
        return self.values[self.index(channel), m]

    def to_csv(self, path: Union[Path, str], columns: Optional[Dict[str, np.ndarray]] = None) -> Path:
        """Integrand dump: r plus F^{(m)} of every channel, or the given columns."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if columns is None:
            columns = {
                f"{name}_d{m}": self.values[c, m] for c, name in enumerate(self.channels) for m in range(self.order + 1)
            }
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r"] + [f"{k}{part}" for k in columns for part in ("", "_imag")])
            for i, r in enumerate(self.grid.nodes):
                row = [f"{r:.12g}"]
                for v in columns.values():
                    row += [f"{np.real(v[i]):.12g}", f"{np.imag(v[i]):.12g}"]
                writer.writerow(row)
        return path


class BracketSampler:
    """Derivative sampler for brackets of h_r = f^(r theta): F_c^{(m)}(r) = B_c(d_r^m f^(r theta))."""

    def __init__(self, functionals: Sequence[BracketFunctional], f: SpectralFunction):
        points = functionals[0].points
        if any(fn.points is not points for fn in functionals[1:]):
            raise ValueError("Bracket functionals must share one Leray family")
        self.functionals = list(functionals)
        self.matrix = np.stack([fn.coefficients for fn in functionals], axis=0)
        self.ray = f.ray(points)

    def __call__(self, r: float, order: int) -> np.ndarray:
        return self.matrix @ self.ray.derivatives(r, order).T


def taylor_weight(f: SpectralFunction, theta: np.ndarray, m: int, order_cap: int) -> np.ndarray:
    """q_m(theta) = sum over |alpha| = m of (m!/alpha!) theta^alpha d^alpha f^(0)."""
    n = theta.shape[-1]
    zero = np.zeros(n)
    out = np.zeros(theta.shape[0], dtype=complex)
    for alpha in multi_indices(n, m):
        coefficient = complex(f.hat_deriv(alpha, zero, order_cap))
        if coefficient == 0:
            continue
        monomial = np.prod(theta ** np.asarray(alpha), axis=-1)
        out += multinomial(alpha) * coefficient * monomial
    return out


def taylor_at_zero(
    f: SpectralFunction, functional: BracketFunctional, m: int, order_cap: Optional[int] = None
) -> complex:
    """F^{(m)}(0) = B(q_m), one bracket of a polynomial-in-theta weight.

    Raises:
        OrderCapExceeded: If m exceeds the derivative cap (default 4k + 4).
    """
    k = functional.family.symbol.k
    cap = order_cap if order_cap is not None else 4 * k + 4
    if m > cap:
        raise OrderCapExceeded(f"Taylor order {m} exceeds the cap {cap}")
    return complex(functional(taylor_weight(f, functional.points, m, cap)))


def boundary_derivative(scan: RadialScan, k: int, n: int, channel: Union[int, str] = 0) -> complex:
    """d^{2k-1}/dr^{2k-1} (r^{k+n-1} F)|_{r=0} = C(2k-1, k+n-1) (k+n-1)! F^{(k-n)}(0); 0 for k < n."""
    if k < n:
        return 0j
    m = k - n
    if m > scan.order:
        raise OrderCapExceeded(f"Scan holds orders up to {scan.order}, boundary term needs {m}")
    return complex(comb(2 * k - 1, k + n - 1) * factorial(k + n - 1) * scan.at_zero[scan.index(channel), m])


def assembly_terms(k: int, n: int) -> list[Tuple[int, float, int]]:
    """Leibniz terms (derivative order of F, coefficient, power of r) of d^{2k}(r^{k+n-1} F)."""
    top = k + n - 1
    terms = []
    for j in range(min(2 * k, top) + 1):
        coefficient = comb(2 * k, j) * factorial(top) / factorial(top - j)
        terms.append((2 * k - j, float(coefficient), top - j))
    return terms


def log_weighted_integrand(scan: RadialScan, k: int, n: int, channel: Union[int, str] = 0) -> np.ndarray:
    """d^{2k}(r^{k+n-1} F)(r) on the grid."""
    r = scan.grid.nodes
    c = scan.index(channel)
    out = np.zeros(r.size, dtype=complex)
    for order, coefficient, power in assembly_terms(k, n):
        if power < 0:
            raise NonintegrableAssembly(f"Term r^{power} F^({order}) in the assembly for k={k}, n={n}")
        if order > scan.order:
            raise OrderCapExceeded(f"Scan holds orders up to {scan.order}, assembly needs {order}")
        out += coefficient * r**power * scan.values[c, order]
    return out


def log_weighted_integral(scan: RadialScan, k: int, n: int, channel: Union[int, str] = 0) -> complex:
    """Integral over (0, R) of log r d^{2k}(r^{k+n-1} F)(r) dr.

    Raises:
        NonintegrableAssembly: If the Leibniz assembly holds a negative power of r.
        TailNotCertified: Raised earlier by ``RadialScan.build``.
    """
    integrand = log_weighted_integrand(scan, k, n, channel)
    grid = scan.grid
    body = np.sum(grid.weights * np.log(grid.nodes) * integrand)
    # only the r^0 term survives at r = 0
    c = scan.index(channel)
    at_zero = sum(
        coefficient * scan.at_zero[c, order] for order, coefficient, power in assembly_terms(k, n) if power == 0
    )
    return complex(body + at_zero * grid.head(0, log=True))


def radial_moment(scan: RadialScan, power: int, channel: Union[int, str] = 0) -> complex:
    """Integral over (0, R) of r^power F(r) dr for power >= 0."""
    if power < 0:
        raise NonintegrableAssembly(f"r^{power} is not handled by the radial rule")
    grid = scan.grid
    c = scan.index(channel)
    body = np.sum(grid.weights * grid.nodes**power * scan.values[c, 0])
    return complex(body + scan.at_zero[c, 0] * grid.head(power))
