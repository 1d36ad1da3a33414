"""Polar Gelfand-Leray transforms u -> L(h)(u) of functions h on the unit sphere.

L(h)(u) du is the push-forward of h(theta) dtheta under theta -> p(theta):
integral of L(h)(u) g(u) du = integral over S^{n-1} of h(theta) g(p(theta)) dtheta.

A profile keeps two representations. Inside the smooth window [-eps, eps]
(certified by hypothesis (H)) the density is a Chebyshev fit. Everywhere the
node-level measure dA = sum_j w_j h(theta_j) delta_{p(theta_j)} is kept as an
exact staircase cumulative, so no pointwise value of L is ever needed away
from the window. Pairings use the blended measure

    (1 - tau(u)) L_fit(u) du + tau(u) dA(u),

where tau is a C-infinity step rising from 0 at |u| = eps/2 to 1 at |u| = eps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
from loguru import logger
from numpy.polynomial import chebyshev
from scipy.special import ndtr

from ..config import settings
from ..schemas.run import LerayEstimator
from ..schemas.symbol import SymbolValidation
from .errors import (
    HypothesisViolated,
    MollifierTooWide,
    NonfiniteProfile,
    OutsideSmoothWindow,
    UnsupportedDimension,
)
from .quadrature import chebyshev_points, composite_gauss
from .sphere import SphereQuadrature, build_quadrature
from .symbol import HomogeneousSymbol, validate_hypothesis

__all__ = [
    "LerayFamily",
    "LerayProfile",
    "SphereQuadrature",
    "build_quadrature",
    "leray_deriv",
    "leray_transform",
    "smooth_step",
    "window_blend",
]

SphereFunction = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

# nodes farther than this many eta from the window do not reach the fit points
_KERNEL_REACH = 10.0
_BISECTIONS = 60
_BLEND_SUBPANELS = 8
_BLEND_POINTS = 16


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)}) between."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def window_blend(u: np.ndarray, epsilon: float) -> np.ndarray:
    """tau(u): 0 on |u| <= eps/2, 1 on |u| >= eps."""
    half = 0.5 * epsilon
    return smooth_step((np.abs(u) - half) / half)


def _gauss(d: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-0.5 * (d / width) ** 2) / (width * np.sqrt(2.0 * np.pi))


def blend_rule(epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature on [-eps, eps] resolving the blend tau."""
    return composite_gauss(
        [-epsilon, -0.5 * epsilon, 0.5 * epsilon, epsilon], _BLEND_POINTS, _BLEND_SUBPANELS
    )


@dataclass(frozen=True, eq=False)
class LerayProfile:
    """Numerical representation of u -> L(h)(u)."""

    support: Tuple[float, float]
    epsilon: float
    coefficients: np.ndarray
    residual: float
    estimator: LerayEstimator
    atoms: np.ndarray
    masses: np.ndarray
    eta: Optional[float] = None
    label: str = field(default="h")

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.masses) and np.any(np.imag(self.masses) != 0)) or bool(
            np.iscomplexobj(self.coefficients) and np.any(np.imag(self.coefficients) != 0)
        )

    def _check_window(self, u: np.ndarray) -> None:
        if np.any(np.abs(u) > self.epsilon * (1.0 + 1e-12)):
            raise OutsideSmoothWindow(
                f"u={np.max(np.abs(u)):.4g} lies outside the smooth window [-{self.epsilon:.4g}, {self.epsilon:.4g}]"
            )

    def value(self, u: Union[float, np.ndarray]) -> np.ndarray:
        """Near-zero fit of L(h) at |u| <= eps."""
        u = np.asarray(u, dtype=float)
        self._check_window(u)
        return chebyshev.chebval(u / self.epsilon, self.coefficients)

    def derivative(self, order: int, u: Union[float, np.ndarray]) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        self._check_window(u)
        coeffs = chebyshev.chebder(self.coefficients, m=order, scl=1.0 / self.epsilon)
        return chebyshev.chebval(u / self.epsilon, coeffs)

    def cumulative(self, u: Union[float, np.ndarray]) -> np.ndarray:
        """A(u) = integral of h over {p <= u}, from the node staircase."""
        running = np.concatenate([[0.0], np.cumsum(self.masses)])
        return running[np.searchsorted(self.atoms, np.asarray(u, dtype=float), side="right")]

    def total_mass(self) -> complex:
        return complex(np.sum(self.masses))

    def grid(self, points: Optional[int] = None) -> np.ndarray:
        points = points or settings.PROFILE_GRID_POINTS
        return np.linspace(self.support[0], self.support[1], points)

    def integrate(self, psi: Callable[[np.ndarray], np.ndarray]) -> complex:
        """Integral of psi(u) L(h)(u) du against the blended measure; psi must be smooth."""
        u, w = blend_rule(self.epsilon)
        near = np.sum(w * (1.0 - window_blend(u, self.epsilon)) * chebyshev.chebval(u / self.epsilon, self.coefficients) * psi(u))
        far = np.sum(window_blend(self.atoms, self.epsilon) * psi(self.atoms) * self.masses)
        return complex(near + far)

    def scaled(self, factor: complex) -> LerayProfile:
        return replace(self, coefficients=factor * self.coefficients, masses=factor * self.masses)

    __rmul__ = scaled

    def __add__(self, other: LerayProfile) -> LerayProfile:
        if other.epsilon != self.epsilon:
            raise ValueError("Profiles with different windows cannot be added")
        if self.atoms.shape == other.atoms.shape and np.array_equal(self.atoms, other.atoms):
            atoms, masses = self.atoms, self.masses + other.masses
        else:
            atoms = np.concatenate([self.atoms, other.atoms])
            order = np.argsort(atoms, kind="stable")
            atoms, masses = atoms[order], np.concatenate([self.masses, other.masses])[order]
        return replace(
            self,
            coefficients=self.coefficients + other.coefficients,
            residual=max(self.residual, other.residual),
            atoms=atoms,
            masses=masses,
            support=(min(self.support[0], other.support[0]), max(self.support[1], other.support[1])),
        )

    def to_csv(self, path: Union[Path, str], points: Optional[int] = None) -> Path:
        """Write columns u, A(u), L_fit(u); L_fit is blank outside the window."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        u = self.grid(points)
        a = self.cumulative(u)
        inside = np.abs(u) <= self.epsilon
        fit = np.full(u.shape, np.nan, dtype=complex)
        fit[inside] = chebyshev.chebval(u[inside] / self.epsilon, self.coefficients)
        imaginary = self.is_complex

        with path.open("w", newline="") as fh:
            fh.write(
                f"# estimator={self.estimator.value} epsilon={self.epsilon:.12g} "
                f"support=[{self.support[0]:.12g}, {self.support[1]:.12g}] residual={self.residual:.3e}\n"
            )
            writer = csv.writer(fh)
            header = ["u", "A", "L_fit"]
            if imaginary:
                header += ["A_imag", "L_fit_imag"]
            writer.writerow(header)
            for ui, ai, fi, ok in zip(u, a, fit, inside):
                row = [f"{ui:.12g}", f"{np.real(ai):.12g}", f"{np.real(fi):.12g}" if ok else ""]
                if imaginary:
                    row += [f"{np.imag(ai):.12g}", f"{np.imag(fi):.12g}" if ok else ""]
                writer.writerow(row)
        logger.debug(f"Profile dump written to {path}")
        return path

    @classmethod
    def from_density(
        cls,
        density: Callable[[np.ndarray], np.ndarray],
        support: Tuple[float, float],
        epsilon: float,
        fit_degree: Optional[int] = None,
        fit_points: Optional[int] = None,
        panels: int = 64,
        points: int = 16,
    ) -> LerayProfile:
        """Profile of a closed-form density supported on ``support``.

        The staircase atoms are a composite Gauss-Legendre rule on the support,
        the window fit interpolates the density at Chebyshev points.
        """
        degree = fit_degree or settings.FIT_DEGREE
        count = fit_points or settings.FIT_POINTS
        x = chebyshev_points(count)
        vander = chebyshev.chebvander(x, degree)
        values = density(epsilon * x)
        coeffs, *_ = np.linalg.lstsq(vander, values, rcond=None)
        residual = float(np.linalg.norm(vander @ coeffs - values) / max(np.linalg.norm(values), 1e-300))
        atoms, weights = composite_gauss(np.linspace(support[0], support[1], panels + 1), points)
        return cls(
            support=(float(support[0]), float(support[1])),
            epsilon=float(epsilon),
            coefficients=coeffs,
            residual=residual,
            estimator=LerayEstimator.SYNTHETIC,
            atoms=atoms,
            masses=density(atoms) * weights,
        )


class LerayFamily:
    """Node-level data shared by all profiles of one symbol.

    ``points`` holds the sphere nodes followed by any auxiliary points an
    estimator evaluates h at (level-set roots for the exact and curve-trace
    estimators). A profile is linear in the values of h at ``points``:
    Chebyshev coefficients are ``fit_matrix @ h[fit_index]`` and the staircase
    masses are ``weights * h[:node_count]``.
    """

    def __init__(
        self,
        sym: HomogeneousSymbol,
        validation: SymbolValidation,
        quad: Optional[SphereQuadrature] = None,
        eta: Optional[float] = None,
        estimator: Optional[LerayEstimator] = None,
        fit_degree: Optional[int] = None,
        fit_points: Optional[int] = None,
    ):
        if not validation.passes_h:
            raise HypothesisViolated(f"{sym.name} does not satisfy (H); Leray profiles are not certified")
        self.symbol = sym
        self.validation = validation
        self.quad = quad or build_quadrature(sym.n)
        if self.quad.dimension != sym.n:
            raise UnsupportedDimension(f"Sphere rule for n={self.quad.dimension} used with n={sym.n}")
        self.epsilon = float(validation.epsilon)
        self.eta = float(eta) if eta is not None else settings.MOLLIFIER_FRACTION * self.epsilon
        if not self.eta > 0:
            raise MollifierTooWide(f"Mollifier width must be positive, got {self.eta}")
        if self.eta > 0.25 * self.epsilon:
            raise MollifierTooWide(f"eta={self.eta:.4g} exceeds eps/4={0.25 * self.epsilon:.4g}")

        if estimator is None:
            estimator = LerayEstimator.EXACT_N2 if sym.n == 2 else LerayEstimator.MOLLIFIED
        if estimator == LerayEstimator.EXACT_N2 and sym.n != 2:
            raise UnsupportedDimension("The exact circle estimator needs n=2")
        if estimator == LerayEstimator.CURVE_TRACE_N3 and sym.n != 3:
            raise UnsupportedDimension("The curve-tracing estimator needs n=3")
        if estimator == LerayEstimator.SYNTHETIC:
            raise ValueError("Synthetic profiles are built with LerayProfile.from_density")
        self.estimator = estimator

        self.nodes = self.quad.nodes
        self.weights = self.quad.weights
        self.values = sym.evaluate(self.nodes)
        self.node_count = self.nodes.shape[0]
        self.order = np.argsort(self.values, kind="stable")
        self.atoms = self.values[self.order]
        self.support = (float(validation.support[0]), float(validation.support[1]))

        self.fit_degree = fit_degree or settings.FIT_DEGREE
        self.fit_u = self.epsilon * chebyshev_points(fit_points or settings.FIT_POINTS)
        self.vander = chebyshev.chebvander(self.fit_u / self.epsilon, self.fit_degree)
        self._pinv = np.linalg.pinv(self.vander)

        extra = np.empty((0, sym.n))
        if estimator == LerayEstimator.MOLLIFIED:
            self.fit_index = np.flatnonzero(np.abs(self.values) <= self.epsilon + _KERNEL_REACH * self.eta)
            self.kernel = self._mollified_kernel(self.fit_u, self.fit_index)
        elif estimator == LerayEstimator.CUMULATIVE:
            self.fit_index = np.flatnonzero(np.abs(self.values) <= self.epsilon + _KERNEL_REACH * self.eta)
            self.kernel = self._cumulative_kernel(self.fit_u, self.fit_index)
        else:
            tracer = self._circle_roots if estimator == LerayEstimator.EXACT_N2 else self._meridian_roots
            extra, self.kernel = tracer()
            self.fit_index = self.node_count + np.arange(extra.shape[0])
        self.points = np.concatenate([self.nodes, extra], axis=0)
        self.fit_matrix = self._pinv @ self.kernel

        logger.info(
            f"Leray family for {sym.name}: {self.node_count} nodes (+{extra.shape[0]} level-set points), "
            f"estimator={estimator.value}, eps={self.epsilon:.4f}, eta={self.eta:.4f}"
        )

    # kernels: rows are fit points, columns are entries of fit_index
    def _mollified_kernel(self, u: np.ndarray, index: np.ndarray, eta: Optional[float] = None) -> np.ndarray:
        """Richardson-combined Gaussian mollifier (4 phi_{eta/2} - phi_eta) / 3, times the weights."""
        eta = eta or self.eta
        d = self.values[index][None, :] - u[:, None]
        return self.weights[index] * (4.0 * _gauss(d, 0.5 * eta) - _gauss(d, eta)) / 3.0

    def _cumulative_kernel(self, u: np.ndarray, index: np.ndarray) -> np.ndarray:
        """Central difference (step eta/4) of the Gaussian-smoothed cumulative, Richardson-combined over eta, eta/2."""
        step = 0.25 * self.eta
        d = u[:, None] - self.values[index][None, :]

        def difference(width: float) -> np.ndarray:
            return (ndtr((d + step) / width) - ndtr((d - step) / width)) / (2.0 * step)

        return self.weights[index] * (4.0 * difference(0.5 * self.eta) - difference(self.eta)) / 3.0

    def _circle_roots(self) -> Tuple[np.ndarray, np.ndarray]:
        """Roots of p(theta) = u on the circle; L(h)(u) = sum h(theta) / |dp/dtheta|."""
        count = self.node_count
        step = 2.0 * np.pi / count
        angles = step * np.arange(count)
        roots, rows, columns, entries = [], [], [], []
        offset = 0
        for i, u in enumerate(self.fit_u):
            above = self.values >= u
            change = np.flatnonzero(above != np.roll(above, -1))
            lo = angles[change]
            hi = lo + step
            lo_above = above[change]
            for _ in range(_BISECTIONS):
                mid = 0.5 * (lo + hi)
                mid_above = self.symbol.evaluate(np.stack([np.cos(mid), np.sin(mid)], axis=-1)) >= u
                same = mid_above == lo_above
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            theta = 0.5 * (lo + hi)
            pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            tangent = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
            slope = np.abs(np.sum(self.symbol.gradient(pts) * tangent, axis=-1))
            roots.append(pts)
            rows.append(np.full(theta.size, i))
            columns.append(offset + np.arange(theta.size))
            entries.append(1.0 / slope)
            offset += theta.size
        kernel = np.zeros((self.fit_u.size, offset))
        kernel[np.concatenate(rows), np.concatenate(columns)] = np.concatenate(entries)
        return np.concatenate(roots, axis=0), kernel

    def _meridian_axis(self) -> int:
        """Coordinate axis whose meridians cross the characteristic set most steeply."""
        samples = np.asarray(self.validation.characteristic_samples, dtype=float)
        if samples.size == 0:
            return self.symbol.n - 1
        grad = self.symbol.gradient(samples)
        scores = []
        for axis in range(self.symbol.n):
            e = np.zeros(self.symbol.n)
            e[axis] = 1.0
            direction = samples[:, axis][:, None] * samples - e
            scores.append(np.min(np.abs(np.sum(grad * direction, axis=-1))))
        return int(np.argmax(scores))

    def _meridian_roots(self) -> Tuple[np.ndarray, np.ndarray]:
        """Trace level circles along meridians theta = cos(phi) e + sin(phi) v(psi).

        dtheta = sin(phi) dphi dpsi, so L(h)(u) = integral dpsi of the sum over
        roots phi of h sin(phi) / |d_phi p|.
        """
        axis = self._meridian_axis()
        frame = np.roll(np.eye(3), -axis, axis=0)
        e, e1, e2 = frame[0], frame[1], frame[2]
        n_psi = 2 * self.quad.level
        n_phi = 2 * self.quad.level
        psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
        phi = np.pi * (np.arange(n_phi) + 0.5) / n_phi
        v = np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2

        def point(ph: np.ndarray, vv: np.ndarray) -> np.ndarray:
            return np.cos(ph)[..., None] * e + np.sin(ph)[..., None] * vv

        grid = self.symbol.evaluate(point(phi[None, :], v[:, None, :]))
        roots, rows, columns, entries = [], [], [], []
        offset = 0
        for i, u in enumerate(self.fit_u):
            above = grid >= u
            meridian, cell = np.nonzero(above[:, :-1] != above[:, 1:])
            lo = phi[cell]
            hi = phi[cell + 1]
            lo_above = above[meridian, cell]
            vv = v[meridian]
            for _ in range(_BISECTIONS):
                mid = 0.5 * (lo + hi)
                same = (self.symbol.evaluate(point(mid, vv)) >= u) == lo_above
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            ph = 0.5 * (lo + hi)
            pts = point(ph, vv)
            d_phi = -np.sin(ph)[:, None] * e + np.cos(ph)[:, None] * vv
            slope = np.abs(np.sum(self.symbol.gradient(pts) * d_phi, axis=-1))
            roots.append(pts)
            rows.append(np.full(ph.size, i))
            columns.append(offset + np.arange(ph.size))
            entries.append((2.0 * np.pi / n_psi) * np.sin(ph) / slope)
            offset += ph.size
        kernel = np.zeros((self.fit_u.size, offset))
        kernel[np.concatenate(rows), np.concatenate(columns)] = np.concatenate(entries)
        logger.debug(f"Curve tracing about axis {axis}: {offset} level-set points")
        return np.concatenate(roots, axis=0), kernel

    # profiles
    def sample(self, h: SphereFunction) -> np.ndarray:
        """Values of h at ``points``."""
        values = h(self.points) if callable(h) else np.asarray(h)
        if values.shape[0] != self.points.shape[0]:
            raise ValueError(f"Expected {self.points.shape[0]} values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise NonfiniteProfile("Non-finite values of h on the sphere")
        return values

    def profile(self, h: SphereFunction, label: str = "h") -> LerayProfile:
        values = self.sample(h)
        fit_values = self.kernel @ values[self.fit_index]
        coeffs = self._pinv @ fit_values
        residual = float(
            np.linalg.norm(self.vander @ coeffs - fit_values) / max(np.linalg.norm(fit_values), 1e-300)
        )
        masses = (self.weights * values[: self.node_count])[self.order]
        return LerayProfile(
            support=self.support,
            epsilon=self.epsilon,
            coefficients=coeffs,
            residual=residual,
            estimator=self.estimator,
            atoms=self.atoms,
            masses=masses,
            eta=self.eta if self.estimator in (LerayEstimator.MOLLIFIED, LerayEstimator.CUMULATIVE) else None,
            label=label,
        )

    def mollified_values(self, h: SphereFunction, u: np.ndarray, eta: Optional[float] = None) -> np.ndarray:
        """Richardson-mollified estimate of L(h) at arbitrary u (any estimator's nodes)."""
        values = self.sample(h)[: self.node_count]
        u = np.atleast_1d(np.asarray(u, dtype=float))
        index = np.arange(self.node_count)
        out = np.empty(u.shape, dtype=np.result_type(values, float))
        for start in range(0, u.size, 16):
            chunk = u[start : start + 16]
            out[start : start + 16] = self._mollified_kernel(chunk, index, eta) @ values
        return out


def leray_transform(
    sym: HomogeneousSymbol,
    h: SphereFunction,
    quad: Optional[SphereQuadrature] = None,
    validation: Optional[SymbolValidation] = None,
    eta: Optional[float] = None,
    estimator: Optional[LerayEstimator] = None,
) -> LerayProfile:
    """One-shot L(h) for a symbol; validates (H) first when no validation is given.

    Raises:
        HypothesisViolated: If the validation reports a failure of (H).
        MollifierTooWide: If eta > eps/4.
    """
    validation = validation or validate_hypothesis(sym)
    family = LerayFamily(sym, validation, quad=quad, eta=eta, estimator=estimator)
    return family.profile(h)


def leray_deriv(profile: LerayProfile, l: int, u: float) -> float | complex:
    """l-th u-derivative of L(h) at |u| <= eps.

    Raises:
        OutsideSmoothWindow: If |u| > eps.
    """
    if l not in (1, 2):
        raise ValueError(f"Only first and second derivatives are certified, got l={l}")
    value = profile.derivative(l, u)
    return complex(value) if np.iscomplexobj(value) else float(value)
