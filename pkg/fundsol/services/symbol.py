"""Homogeneous polynomial symbols and hypothesis (H)."""

from __future__ import annotations

import functools
import json
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from ..config import settings
from ..schemas.symbol import MonomialSpec, SymbolSpec, SymbolValidation, ValidationTolerances
from .errors import DegenerateSymbol, DegreeError, DimensionMismatch
from .polynomial import Polynomial
from .sphere import build_quadrature, random_rotation

# seeds handed to the local degeneracy search
_POLISH_SEEDS = 8
_MAX_REPORTED_SAMPLES = 512


class HomogeneousSymbol:
    """Real homogeneous polynomial p of degree k >= 1 on R^n, n >= 2."""

    def __init__(self, polynomial: Polynomial, name: Optional[str] = None):
        if polynomial.dimension < 2:
            raise DimensionMismatch(f"Symbols need n >= 2, got n={polynomial.dimension}")
        if polynomial.is_zero():
            raise DegreeError("At least one coefficient must be nonzero")
        if not polynomial.is_homogeneous():
            raise DegreeError(
                f"Monomials of degrees {polynomial.low_degree}..{polynomial.degree} are not homogeneous"
            )
        if polynomial.degree < 1:
            raise DegreeError("Constant symbols (k=0) are not admissible")
        if not polynomial.is_real():
            raise DegreeError("Symbols must have real coefficients")
        self.polynomial = Polynomial(
            {a: float(np.real(c)) for a, c in polynomial.items()}, polynomial.dimension
        )
        self.name = name or "p"
        self._gradient = self.polynomial.gradient()

    # constructors
    @classmethod
    def from_monomials(
        cls, monomials: Sequence[Tuple[Sequence[int], float]], n: int, name: Optional[str] = None
    ) -> HomogeneousSymbol:
        return cls(Polynomial.from_monomials(monomials, n), name=name)

    @classmethod
    def from_spec(cls, spec: SymbolSpec) -> HomogeneousSymbol:
        return cls.from_monomials([(m.alpha, m.coeff) for m in spec.monomials], spec.n, spec.name)

    @classmethod
    def load(cls, path: Path | str) -> HomogeneousSymbol:
        spec = SymbolSpec.model_validate(json.loads(Path(path).read_text()))
        return cls.from_spec(spec)

    def to_spec(self) -> SymbolSpec:
        return SymbolSpec(
            n=self.n,
            k=self.k,
            monomials=[MonomialSpec(alpha=list(a), coeff=float(c)) for a, c in self.polynomial.items()],
            name=self.name,
        )

    # basic data
    @property
    def n(self) -> int:
        return self.polynomial.dimension

    @property
    def k(self) -> int:
        return self.polynomial.degree

    def __repr__(self) -> str:
        return f"HomogeneousSymbol({self.name}, n={self.n}, k={self.k})"

    # evaluation
    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        return self.polynomial.evaluate(np.asarray(xi, dtype=float))

    __call__ = evaluate

    def gradient(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.stack([g.evaluate(xi) for g in self._gradient], axis=-1)

    def tangential_gradient(self, theta: np.ndarray) -> np.ndarray:
        """grad p(theta) - <grad p(theta), theta> theta, for unit theta."""
        theta = np.asarray(theta, dtype=float)
        g = self.gradient(theta)
        radial = np.sum(g * theta, axis=-1, keepdims=True)
        return g - radial * theta

    # derived symbols
    def rotated(self, rotation: np.ndarray) -> HomogeneousSymbol:
        """The symbol xi -> p(R xi)."""
        return HomogeneousSymbol(self.polynomial.compose_linear(rotation), name=f"{self.name}∘R")

    def scaled(self, factor: float) -> HomogeneousSymbol:
        return HomogeneousSymbol(self.polynomial * factor, name=self.name)

    def __mul__(self, other: HomogeneousSymbol) -> HomogeneousSymbol:
        return HomogeneousSymbol(self.polynomial * other.polynomial, name=f"{self.name}*{other.name}")

    @functools.cached_property
    def sphere_extrema(self) -> Tuple[float, float]:
        """(min p, max p) on S^{n-1}, from a dense product grid."""
        level = {2: 2048, 3: 192}.get(self.n, max(4, int(1e5 ** (1.0 / (self.n - 1)))))
        values = self.evaluate(build_quadrature(self.n, level).nodes)
        return float(values.min()), float(values.max())

    def sup_norm(self) -> float:
        lo, hi = self.sphere_extrema
        return max(abs(lo), abs(hi))


def _bisect_on_arcs(
    sym: HomogeneousSymbol, a: np.ndarray, b: np.ndarray, iterations: int = 60
) -> np.ndarray:
    """Roots of p on the arcs between rows of a and b, where p(a) and p(b) differ in sign."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    sign_a = np.sign(sym.evaluate(a))

    def point(s: np.ndarray) -> np.ndarray:
        x = (1.0 - s)[:, None] * a + s[:, None] * b
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        same = np.sign(sym.evaluate(point(mid))) == sign_a
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return point(0.5 * (lo + hi))


def _sign_change_pairs(values: np.ndarray, shape: Tuple[int, ...]) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Index pairs of grid neighbours with strictly opposite signs (the last axis is periodic)."""
    grid = values.reshape(shape)
    flat = np.arange(values.size).reshape(shape)
    pairs = []
    for axis in range(len(shape)):
        periodic = axis == len(shape) - 1
        nxt = np.roll(grid, -1, axis=axis)
        nxt_idx = np.roll(flat, -1, axis=axis)
        mask = grid * nxt < 0
        if not periodic:
            edge = [slice(None)] * len(shape)
            edge[axis] = -1
            mask[tuple(edge)] = False
        pairs.append((flat[mask], nxt_idx[mask]))
    return pairs


def _degeneracy_score(sym: HomogeneousSymbol, scale: float) -> Callable[[np.ndarray], float]:
    k = sym.k

    def score(x: np.ndarray) -> float:
        theta = x / np.linalg.norm(x)
        p = float(sym.evaluate(theta)) / scale
        g = sym.gradient(theta) / (k * scale)
        return p * p + float(g @ g)

    return score


def validate_hypothesis(
    sym: HomogeneousSymbol,
    sample_budget: Optional[int] = None,
    tolerances: Optional[ValidationTolerances] = None,
    seed: Optional[int] = None,
    raise_on_degenerate: bool = True,
) -> SymbolValidation:
    """Sample the characteristic set of p and check hypothesis (H).

    Seeds come from sign changes between neighbours of a randomly rotated
    product grid of about ``sample_budget`` nodes; roots are polished by
    bisection along the connecting arcs. The lowest-gradient samples are then
    handed to a local search for points where p and grad p vanish together.

    Args:
        sym: Symbol to validate.
        sample_budget: Approximate number of grid nodes (>= 1000).
        tolerances: Relative zero and gradient tolerances, optional epsilon override.
        seed: Seed of the grid rotation.
        raise_on_degenerate: Raise instead of returning ``passes_h=False``.

    Returns:
        SymbolValidation with the characteristic samples and the window radius epsilon.

    Raises:
        DegenerateSymbol: If a zero-set sample has tangential gradient below tolerance.
    """
    budget = sample_budget or settings.SAMPLE_BUDGET
    if budget < 1000:
        raise ValueError(f"sample_budget must be at least 1000, got {budget}")
    tolerances = tolerances or ValidationTolerances()
    seed = settings.SEED if seed is None else seed
    n, k = sym.n, sym.k

    level = max(4, int(round((budget / 2.0) ** (1.0 / (n - 1)))))
    quad = build_quadrature(n, level).rotated(random_rotation(n, seed))
    nodes = quad.nodes
    values = sym.evaluate(nodes)

    sup = max(sym.sup_norm(), float(np.abs(values).max()))
    zero_tol = tolerances.zero_relative * sup
    grad_tol = tolerances.gradient_relative * k * sup
    support = [float(min(values.min(), sym.sphere_extrema[0])), float(max(values.max(), sym.sphere_extrema[1]))]

    # roots: exact grid hits plus bisected sign changes
    roots = [nodes[np.abs(values) <= zero_tol]]
    for first, second in _sign_change_pairs(np.where(np.abs(values) <= zero_tol, 0.0, values), quad.grid_shape):
        if first.size:
            roots.append(_bisect_on_arcs(sym, nodes[first], nodes[second]))
    samples = np.concatenate(roots, axis=0) if roots else np.empty((0, n))
    if samples.size:
        samples = samples / np.linalg.norm(samples, axis=1, keepdims=True)
        _, keep = np.unique(np.round(samples, 9), axis=0, return_index=True)
        samples = samples[np.sort(keep)]

    tangential_all = np.linalg.norm(sym.tangential_gradient(nodes), axis=1)
    empty = samples.shape[0] == 0

    if empty:
        logger.info(f"{sym.name}: no sign change on the sphere, symbol is definite")
        epsilon = tolerances.window_fraction * float(np.abs(values).min())
        min_grad = float(np.linalg.norm(sym.gradient(nodes), axis=1).min())
        offending: List[List[float]] = []
    else:
        tangential = np.linalg.norm(sym.tangential_gradient(samples), axis=1)
        min_grad = float(tangential.min())
        offending = samples[tangential <= grad_tol].tolist()

        # local search for points with p = 0 and grad p = 0 simultaneously
        score = _degeneracy_score(sym, sup)
        starts = list(samples[np.argsort(tangential)[:_POLISH_SEEDS]])
        for x0 in starts:
            res = minimize(
                score,
                x0,
                method="Nelder-Mead",
                options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 4000 * n},
            )
            if np.sqrt(max(res.fun, 0.0)) <= tolerances.gradient_relative:
                theta = res.x / np.linalg.norm(res.x)
                offending.append(theta.tolist())
                min_grad = min(min_grad, float(np.linalg.norm(sym.tangential_gradient(theta))))

        below = tangential_all < 0.5 * min_grad
        eps_prime = float(np.abs(values[below]).min()) if below.any() else float(np.abs(values).max())
        epsilon = tolerances.window_fraction * eps_prime

    overridden = tolerances.epsilon_override is not None
    if overridden:
        epsilon = float(tolerances.epsilon_override)

    passes = empty or (min_grad > grad_tol and not offending)
    if samples.shape[0] > _MAX_REPORTED_SAMPLES:
        pick = np.linspace(0, samples.shape[0] - 1, _MAX_REPORTED_SAMPLES).astype(int)
        reported = samples[pick]
    else:
        reported = samples

    validation = SymbolValidation(
        passes_h=bool(passes),
        min_tangential_gradient_norm=max(min_grad, 0.0),
        characteristic_samples=reported.tolist(),
        epsilon=max(epsilon, np.finfo(float).tiny),
        epsilon_overridden=overridden,
        empty_characteristic_set=empty,
        sup_norm=sup,
        zero_tolerance=zero_tol,
        gradient_tolerance=grad_tol,
        offending_directions=offending[:_MAX_REPORTED_SAMPLES],
        support=support,
    )
    logger.info(
        f"{sym.name}: passes_H={validation.passes_h}, {samples.shape[0]} zero-set samples, "
        f"min |grad_t p|={min_grad:.3e}, epsilon={validation.epsilon:.4f}"
    )
    if not passes and raise_on_degenerate:
        raise DegenerateSymbol(
            f"{sym.name}: grad p vanishes on the characteristic set "
            f"(min tangential gradient {min_grad:.3e} <= {grad_tol:.3e})",
            directions=validation.offending_directions,
        )
    return validation
