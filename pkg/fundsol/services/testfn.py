"""Gaussian x polynomial test functions with closed-form Fourier data.

Convention: f^(xi) = integral of exp(-i<x, xi>) f(x) dx. A test function is
stored through its hat,

    f^(xi) = (2 pi sigma^2)^{n/2} S(xi) exp(-i<a, xi> - sigma^2 |xi|^2 / 2),

with S = m * S_q, where m is the spectral multiplier and S_q comes from the
x-space prefactor q by the rule FT(x^beta g) = i^{|beta|} d^beta g^.
"""

from __future__ import annotations

import functools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from math import comb, factorial
from typing import List, Optional, Sequence, Tuple, TypeAlias

import numpy as np

from ..schemas.testfn import TestFunctionSpec
from .errors import DimensionMismatch, NonPositiveScale, NonPositiveWidth, OrderCapExceeded
from .polynomial import MultiIndex, Polynomial
from .symbol import HomogeneousSymbol

Complex: TypeAlias = complex


def hermite_e(order: int, z: np.ndarray) -> List[np.ndarray]:
    """Probabilists' Hermite polynomials He_0..He_order at (complex) z."""
    z = np.asarray(z)
    values = [np.ones_like(z)]
    if order >= 1:
        values.append(z.copy())
    for l in range(1, order):
        values.append(z * values[l] - l * values[l - 1])
    return values


class RayEvaluator(ABC):
    """r-derivatives of f^(r theta) for a fixed set of directions theta."""

    @abstractmethod
    def derivatives(self, r: float, order: int) -> np.ndarray:
        """Array of shape (order + 1, N): d^m/dr^m f^(r theta_j) for m = 0..order."""


class SpectralFunction(ABC):
    """Common interface of single test functions and their linear combinations."""

    dimension: int

    @abstractmethod
    def hat(self, xi: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hat_deriv(self, beta: Sequence[int], xi: np.ndarray, order_cap: Optional[int] = None) -> np.ndarray:
        ...

    @abstractmethod
    def ray(self, theta: np.ndarray) -> RayEvaluator:
        ...

    @abstractmethod
    def apply_symbol(self, sym: HomogeneousSymbol) -> SpectralFunction:
        ...

    @abstractmethod
    def dilate(self, lam: float) -> SpectralFunction:
        ...

    @property
    @abstractmethod
    def value_at_zero(self) -> Optional[Complex]:
        ...

    @property
    @abstractmethod
    def sigma_bounds(self) -> Tuple[float, float]:
        ...

    @abstractmethod
    def components(self) -> List[Tuple[Complex, SpectralTestFunction]]:
        ...

    def hat_eval(self, xi: np.ndarray) -> np.ndarray:
        return self.hat(xi)

    def __add__(self, other: SpectralFunction) -> SpectralCombination:
        if other.dimension != self.dimension:
            raise DimensionMismatch("Cannot add test functions of different dimensions")
        return SpectralCombination(tuple(self.components() + other.components()))

    def __rmul__(self, scalar: Complex) -> SpectralCombination:
        return SpectralCombination(tuple((scalar * c, f) for c, f in self.components()))

    def __mul__(self, scalar: Complex) -> SpectralCombination:
        return self.__rmul__(scalar)

    def __sub__(self, other: SpectralFunction) -> SpectralCombination:
        return self + (-1.0) * other


@dataclass(frozen=True, eq=False)
class SpectralTestFunction(SpectralFunction):
    """f(x) = q(x) exp(-|x-a|^2 / (2 sigma^2)), optionally followed by a Fourier multiplier m."""

    center: Tuple[float, ...]
    sigma: float
    prefactor: Polynomial
    multiplier: Polynomial
    label: str = field(default="f")

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise NonPositiveWidth(f"sigma must be positive, got {self.sigma}")
        n = len(self.center)
        if self.prefactor.dimension != n or self.multiplier.dimension != n:
            raise DimensionMismatch("Prefactor, multiplier and center must share the dimension")

    @property
    def dimension(self) -> int:  # type: ignore[override]
        return len(self.center)

    @functools.cached_property
    def amplitude(self) -> float:
        return float((2.0 * np.pi * self.sigma**2) ** (self.dimension / 2.0))

    @functools.cached_property
    def _a(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def _gaussian_step(self, poly: Polynomial, axis: int) -> Polynomial:
        """T -> d_axis T + (-i a_axis - sigma^2 xi_axis) T, i.e. d_axis(T E) = (...) E."""
        n = self.dimension
        factor = Polynomial.constant(-1j * self._a[axis], n) - self.sigma**2 * Polynomial.coordinate(axis, n)
        return poly.deriv(axis) + factor * poly

    @functools.cached_property
    def spectral_polynomial(self) -> Polynomial:
        """S = m * S_q with f^ = amplitude * S * E."""
        n = self.dimension
        s_q = Polynomial(None, n)
        for beta, q_beta in self.prefactor.items():
            t = Polynomial.constant(1.0, n)
            for axis, order in enumerate(beta):
                for _ in range(order):
                    t = self._gaussian_step(t, axis)
            s_q = s_q + t * (q_beta * (1j ** sum(beta)))
        return self.multiplier * s_q

    def _exponential(self, xi: np.ndarray) -> np.ndarray:
        return np.exp(-1j * (xi @ self._a) - 0.5 * self.sigma**2 * np.sum(xi * xi, axis=-1))

    def hat(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.amplitude * self.spectral_polynomial.evaluate(xi) * self._exponential(xi)

    def hat_deriv(self, beta: Sequence[int], xi: np.ndarray, order_cap: Optional[int] = None) -> np.ndarray:
        """d^beta f^(xi) by Leibniz over S and Hermite factors of the Gaussian.

        Raises:
            OrderCapExceeded: If |beta| exceeds ``order_cap`` (no cap when None).
        """
        beta = tuple(int(b) for b in beta)
        if len(beta) != self.dimension:
            raise DimensionMismatch(f"Multi-index {beta} does not match n={self.dimension}")
        if order_cap is not None and sum(beta) > order_cap:
            raise OrderCapExceeded(f"|beta|={sum(beta)} exceeds the derivative cap {order_cap}")
        xi = np.asarray(xi, dtype=float)
        s = self.sigma
        # per-axis Hermite tables: d_j^d E / E = (-sigma)^d He_d(sigma xi_j + i a_j / sigma)
        tables = [
            hermite_e(beta[j], s * xi[..., j] + 1j * self._a[j] / s) for j in range(self.dimension)
        ]
        total = np.zeros(xi.shape[:-1], dtype=complex)
        for gamma in _sub_indices(beta):
            ds = self.spectral_polynomial.partial(gamma)
            if ds.is_zero():
                continue
            weight = 1
            gauss = np.ones(xi.shape[:-1], dtype=complex)
            for j in range(self.dimension):
                weight *= comb(beta[j], gamma[j])
                d = beta[j] - gamma[j]
                if d:
                    gauss = gauss * ((-s) ** d) * tables[j][d]
            total = total + weight * ds.evaluate(xi) * gauss
        return self.amplitude * total * self._exponential(xi)

    def ray(self, theta: np.ndarray) -> RayEvaluator:
        return _GaussianRay(self, np.asarray(theta, dtype=float))

    def apply_symbol(self, sym: HomogeneousSymbol) -> SpectralTestFunction:
        """The operator Q: (Qf)^ = p f^."""
        if sym.n != self.dimension:
            raise DimensionMismatch(f"Symbol in n={sym.n} applied to a test function in n={self.dimension}")
        return replace(self, multiplier=self.multiplier * sym.polynomial, label=f"Q{self.label}")

    def dilate(self, lam: float) -> SpectralTestFunction:
        """x -> f(lam x); f^_lam(xi) = lam^{-n} f^(xi / lam)."""
        if not lam > 0:
            raise NonPositiveScale(f"Dilation factor must be positive, got {lam}")
        return SpectralTestFunction(
            center=tuple(c / lam for c in self.center),
            sigma=self.sigma / lam,
            prefactor=self.prefactor.scaled(lam),
            multiplier=self.multiplier.scaled(1.0 / lam),
            label=f"{self.label}_{lam:g}",
        )

    @functools.cached_property
    def _value_at_zero(self) -> Optional[Complex]:
        if self.multiplier.degree > 0:
            return None
        m0 = self.multiplier.coefficient((0,) * self.dimension)
        q0 = self.prefactor.coefficient((0,) * self.dimension)
        return complex(m0 * q0 * np.exp(-float(self._a @ self._a) / (2.0 * self.sigma**2)))

    @property
    def value_at_zero(self) -> Optional[Complex]:
        return self._value_at_zero

    @property
    def sigma_bounds(self) -> Tuple[float, float]:
        return self.sigma, self.sigma

    def components(self) -> List[Tuple[Complex, SpectralTestFunction]]:
        return [(1.0, self)]


class _GaussianRay(RayEvaluator):
    def __init__(self, f: SpectralTestFunction, theta: np.ndarray):
        self.f = f
        self.b = theta @ f._a
        poly = f.spectral_polynomial
        self.parts = [
            f.amplitude * poly.homogeneous_part(d).evaluate(theta) for d in range(poly.degree + 1)
        ]

    def derivatives(self, r: float, order: int) -> np.ndarray:
        s = self.f.sigma
        z = s * r + 1j * self.b / s
        gauss = np.exp(-1j * r * self.b - 0.5 * s * s * r * r)
        he = hermite_e(order, z)
        top = len(self.parts) - 1
        # d^l/dr^l of sum_d r^d P_d(theta)
        poly_derivs = []
        for l in range(min(order, top) + 1):
            acc = np.zeros_like(self.b, dtype=complex)
            for d in range(l, top + 1):
                acc = acc + (factorial(d) // factorial(d - l)) * r ** (d - l) * self.parts[d]
            poly_derivs.append(acc)
        out = np.empty((order + 1, self.b.size), dtype=complex)
        for m in range(order + 1):
            acc = np.zeros(self.b.size, dtype=complex)
            for l in range(min(m, top) + 1):
                acc = acc + comb(m, l) * poly_derivs[l] * ((-s) ** (m - l)) * he[m - l]
            out[m] = acc * gauss
        return out


class _CombinationRay(RayEvaluator):
    def __init__(self, parts: List[Tuple[Complex, RayEvaluator]]):
        self.parts = parts

    def derivatives(self, r: float, order: int) -> np.ndarray:
        return sum(c * ev.derivatives(r, order) for c, ev in self.parts)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class SpectralCombination(SpectralFunction):
    """Finite linear combination sum c_i f_i of spectral test functions."""

    terms: Tuple[Tuple[Complex, SpectralTestFunction], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("Empty combination")
        dims = {f.dimension for _, f in self.terms}
        if len(dims) != 1:
            raise DimensionMismatch(f"Mixed dimensions {sorted(dims)}")

    @property
    def dimension(self) -> int:  # type: ignore[override]
        return self.terms[0][1].dimension

    def hat(self, xi: np.ndarray) -> np.ndarray:
        return sum(c * f.hat(xi) for c, f in self.terms)  # type: ignore[return-value]

    def hat_deriv(self, beta: Sequence[int], xi: np.ndarray, order_cap: Optional[int] = None) -> np.ndarray:
        return sum(c * f.hat_deriv(beta, xi, order_cap) for c, f in self.terms)  # type: ignore[return-value]

    def ray(self, theta: np.ndarray) -> RayEvaluator:
        return _CombinationRay([(c, f.ray(theta)) for c, f in self.terms])

    def apply_symbol(self, sym: HomogeneousSymbol) -> SpectralCombination:
        return SpectralCombination(tuple((c, f.apply_symbol(sym)) for c, f in self.terms))

    def dilate(self, lam: float) -> SpectralCombination:
        return SpectralCombination(tuple((c, f.dilate(lam)) for c, f in self.terms))

    @property
    def value_at_zero(self) -> Optional[Complex]:
        values = [f.value_at_zero for _, f in self.terms]
        if any(v is None for v in values):
            return None
        return complex(sum(c * v for (c, _), v in zip(self.terms, values)))  # type: ignore[misc]

    @property
    def sigma_bounds(self) -> Tuple[float, float]:
        sigmas = [f.sigma for _, f in self.terms]
        return min(sigmas), max(sigmas)

    def components(self) -> List[Tuple[Complex, SpectralTestFunction]]:
        return list(self.terms)


def _sub_indices(beta: MultiIndex) -> List[MultiIndex]:
    """All gamma <= beta componentwise."""
    out: List[MultiIndex] = [()]
    for b in beta:
        out = [g + (i,) for g in out for i in range(b + 1)]
    return out


def gaussian(
    center: Sequence[float],
    sigma: float = 1.0,
    prefactor: Optional[Polynomial] = None,
    label: Optional[str] = None,
) -> SpectralTestFunction:
    """f(x) = q(x) exp(-|x - a|^2 / (2 sigma^2)); f^(xi) = (2 pi sigma^2)^{n/2} exp(-i<a,xi>) exp(-sigma^2 |xi|^2 / 2) for q = 1.

    Raises:
        NonPositiveWidth: If sigma <= 0.
    """
    n = len(center)
    if not sigma > 0:
        raise NonPositiveWidth(f"sigma must be positive, got {sigma}")
    return SpectralTestFunction(
        center=tuple(float(c) for c in center),
        sigma=float(sigma),
        prefactor=prefactor if prefactor is not None else Polynomial.constant(1.0, n),
        multiplier=Polynomial.constant(1.0, n),
        label=label or f"gauss{tuple(float(c) for c in center)}",
    )


def from_spec(spec: TestFunctionSpec) -> SpectralTestFunction:
    n = len(spec.center)
    prefactor = None
    if spec.poly:
        prefactor = Polynomial.from_monomials([(m.alpha, m.coeff) for m in spec.poly], n)
    return gaussian(spec.center, spec.sigma, prefactor, label=spec.label)
