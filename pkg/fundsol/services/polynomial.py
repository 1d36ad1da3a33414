"""Sparse multivariate polynomials keyed by exponent multi-indices."""

from __future__ import annotations

from math import factorial
from typing import Dict, Iterator, Mapping, Sequence, Tuple, TypeAlias, Union

import numpy as np

from .errors import DimensionMismatch

MultiIndex: TypeAlias = Tuple[int, ...]
Scalar: TypeAlias = Union[int, float, complex]


def multi_indices(dimension: int, order: int) -> Iterator[MultiIndex]:
    """Yield every exponent tuple of the given length whose entries sum to ``order``."""
    if dimension == 1:
        yield (order,)
        return
    for value in range(order, -1, -1):
        for rest in multi_indices(dimension - 1, order - value):
            yield (value,) + rest


def multinomial(alpha: Sequence[int]) -> int:
    """|alpha|! / alpha!"""
    out = factorial(sum(alpha))
    for a in alpha:
        out //= factorial(a)
    return out


class Polynomial:
    """
    Polynomial in ``dimension`` variables stored as ``{alpha: coefficient}``.

    E.g. x_0^2 + 3*x_1 + 4 in two variables is ``{(2, 0): 1.0, (0, 1): 3.0, (0, 0): 4.0}``.
    Instances are treated as immutable; every operation returns a new polynomial.
    Zero coefficients are dropped on construction.
    """

    __slots__ = ("_coeffs", "dimension")

    def __init__(self, coeffs: Mapping[MultiIndex, Scalar] | None, dimension: int):
        if dimension < 1:
            raise DimensionMismatch(f"Polynomial dimension must be positive, got {dimension}")
        self.dimension = dimension
        self._coeffs: Dict[MultiIndex, Scalar] = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dimension:
                raise DimensionMismatch(
                    f"Exponent {alpha} does not match dimension {dimension}"
                )
            if any(a < 0 for a in alpha):
                raise ValueError(f"Negative exponent in {alpha}")
            if c != 0:
                self._coeffs[alpha] = self._coeffs.get(alpha, 0) + c
        self._coeffs = {a: c for a, c in self._coeffs.items() if c != 0}

    # construction helpers
    @classmethod
    def constant(cls, value: Scalar, dimension: int) -> Polynomial:
        return cls({(0,) * dimension: value}, dimension)

    @classmethod
    def coordinate(cls, axis: int, dimension: int) -> Polynomial:
        alpha = [0] * dimension
        alpha[axis] = 1
        return cls({tuple(alpha): 1.0}, dimension)

    @classmethod
    def from_monomials(
        cls, monomials: Sequence[Tuple[Sequence[int], Scalar]], dimension: int
    ) -> Polynomial:
        coeffs: Dict[MultiIndex, Scalar] = {}
        for alpha, c in monomials:
            key = tuple(int(a) for a in alpha)
            coeffs[key] = coeffs.get(key, 0) + c
        return cls(coeffs, dimension)

    # introspection
    def items(self) -> Iterator[Tuple[MultiIndex, Scalar]]:
        return iter(sorted(self._coeffs.items()))

    def coefficient(self, alpha: Sequence[int]) -> Scalar:
        return self._coeffs.get(tuple(alpha), 0)

    def __len__(self) -> int:
        return len(self._coeffs)

    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self._coeffs), default=0)

    @property
    def low_degree(self) -> int:
        return min((sum(a) for a in self._coeffs), default=0)

    def is_homogeneous(self) -> bool:
        return self.degree == self.low_degree

    def is_real(self) -> bool:
        return all(np.imag(c) == 0 for c in self._coeffs.values())

    def homogeneous_part(self, degree: int) -> Polynomial:
        return Polynomial(
            {a: c for a, c in self._coeffs.items() if sum(a) == degree}, self.dimension
        )

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    # arithmetic
    def _check(self, other: Polynomial) -> None:
        if other.dimension != self.dimension:
            raise DimensionMismatch(
                f"Cannot combine polynomials in {self.dimension} and {other.dimension} variables"
            )

    def __add__(self, other: Polynomial | Scalar) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other, self.dimension)
        self._check(other)
        coeffs = dict(self._coeffs)
        for a, c in other._coeffs.items():
            coeffs[a] = coeffs.get(a, 0) + c
        return Polynomial(coeffs, self.dimension)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial({a: -c for a, c in self._coeffs.items()}, self.dimension)

    def __sub__(self, other: Polynomial | Scalar) -> Polynomial:
        return self + (-other)

    def __mul__(self, other: Polynomial | Scalar) -> Polynomial:
        if not isinstance(other, Polynomial):
            return Polynomial({a: c * other for a, c in self._coeffs.items()}, self.dimension)
        self._check(other)
        coeffs: Dict[MultiIndex, Scalar] = {}
        for a, ca in self._coeffs.items():
            for b, cb in other._coeffs.items():
                key = tuple(x + y for x, y in zip(a, b))
                coeffs[key] = coeffs.get(key, 0) + ca * cb
        return Polynomial(coeffs, self.dimension)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> Polynomial:
        if power < 0:
            raise ValueError("Negative powers are not polynomials")
        out = Polynomial.constant(1.0, self.dimension)
        for _ in range(power):
            out = out * self
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dimension == other.dimension and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.dimension, tuple(sorted(self._coeffs.items(), key=lambda t: t[0]))))

    def __repr__(self) -> str:
        terms = " + ".join(f"{c}*x^{a}" for a, c in self.items()) or "0"
        return f"Polynomial({terms}, n={self.dimension})"

    # calculus
    def deriv(self, axis: int, order: int = 1) -> Polynomial:
        """Partial derivative with respect to x_axis, ``order`` times."""
        coeffs: Dict[MultiIndex, Scalar] = {}
        for a, c in self._coeffs.items():
            if a[axis] < order:
                continue
            factor = factorial(a[axis]) // factorial(a[axis] - order)
            b = list(a)
            b[axis] -= order
            key = tuple(b)
            coeffs[key] = coeffs.get(key, 0) + factor * c
        return Polynomial(coeffs, self.dimension)

    def partial(self, beta: Sequence[int]) -> Polynomial:
        out = self
        for axis, order in enumerate(beta):
            if order:
                out = out.deriv(axis, order)
        return out

    def gradient(self) -> Tuple[Polynomial, ...]:
        return tuple(self.deriv(i) for i in range(self.dimension))

    # substitutions
    def scaled(self, factor: float) -> Polynomial:
        """The polynomial x -> p(factor * x)."""
        return Polynomial(
            {a: c * factor ** sum(a) for a, c in self._coeffs.items()}, self.dimension
        )

    def compose_linear(self, matrix: np.ndarray) -> Polynomial:
        """The polynomial x -> p(M x) for a square matrix M."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (self.dimension, self.dimension):
            raise DimensionMismatch(f"Expected a {self.dimension}x{self.dimension} matrix")
        rows = [
            Polynomial(
                {
                    tuple(1 if j == i else 0 for j in range(self.dimension)): matrix[r, i]
                    for i in range(self.dimension)
                },
                self.dimension,
            )
            for r in range(self.dimension)
        ]
        out = Polynomial(None, self.dimension)
        for a, c in self._coeffs.items():
            term = Polynomial.constant(c, self.dimension)
            for r, e in enumerate(a):
                if e:
                    term = term * rows[r] ** e
            out = out + term
        return out

    # evaluation
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (..., dimension)."""
        points = np.asarray(points)
        if points.shape[-1] != self.dimension:
            raise DimensionMismatch(
                f"Points of width {points.shape[-1]} for a polynomial in {self.dimension} variables"
            )
        shape = points.shape[:-1]
        dtype = np.result_type(points.dtype, *(type(c) for c in self._coeffs.values()), float)
        out = np.zeros(shape, dtype=dtype)
        if not self._coeffs:
            return out

        # cached powers per variable
        powers = []
        for i in range(self.dimension):
            top = max(a[i] for a in self._coeffs)
            x = points[..., i]
            pw = [np.ones(shape, dtype=points.dtype)]
            for _ in range(top):
                pw.append(pw[-1] * x)
            powers.append(pw)

        for a, c in self._coeffs.items():
            term = np.full(shape, c, dtype=dtype)
            for i, e in enumerate(a):
                if e:
                    term = term * powers[i][e]
            out += term
        return out

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)
