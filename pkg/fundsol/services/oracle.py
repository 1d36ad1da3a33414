"""Independent checks of the solution functional.

The continuation family

    M(zeta) = (2 pi)^{-n} integral (p^2)^{zeta - 1} p f^ dxi
            = (2 pi)^{-n} integral_0^inf r^{k(2 zeta - 1) + n - 1} B_zeta(r) dr,

with B_zeta the power-kernel bracket of f^(r .), converges for
zeta > max(0, (k - n)/(2k)) and continues meromorphically to zeta = 0 with
a pole of order at most two there. Its constant Laurent coefficient is an
independent value of <s, f>.
"""

from __future__ import annotations

import asyncio
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from loguru import logger

from ..config import settings
from ..schemas.report import (
    Adjudication,
    ComplexValue,
    ContinuityCheck,
    LaurentFit,
    MSample,
    PrincipalValueCheck,
    ProofConstants,
    ProofConstantValue,
)
from ..schemas.run import Budgets
from .errors import (
    BudgetExceeded,
    CaseMismatch,
    HypothesisViolated,
    IllConditionedFit,
    NoConvergenceTrend,
    OutsideConvergenceRegion,
    PoleOrderExceeded,
)
from .leray import LerayFamily
from .pairing import BracketFunctional, LorentzKernel, PowerKernel
from .quadrature import chebyshev_points, composite_gauss, gauss_jacobi_left
from .radial import RadialGrid
from .solution import SolutionFunctional, build_family
from .sphere import build_quadrature
from .symbol import HomogeneousSymbol, validate_hypothesis
from .testfn import SpectralFunction

# relative error an M(zeta) sample may declare before the budget counts as exhausted
SAMPLE_TOLERANCE = 1e-3
DEFAULT_DELTAS = tuple(0.1 * 0.5**i for i in range(6))


class ContinuationOracle:
    """Samples of M(zeta) for one Leray family."""

    def __init__(self, family: LerayFamily, budgets: Optional[Budgets] = None):
        self.family = family
        self.symbol = family.symbol
        self.budgets = budgets or Budgets()
        self.n, self.k = self.symbol.n, self.symbol.k
        self.sigma0 = max(0.0, (self.k - self.n) / (2.0 * self.k))

    @classmethod
    def for_symbol(
        cls, sym: HomogeneousSymbol, budgets: Optional[Budgets] = None, seed: Optional[int] = None
    ) -> ContinuationOracle:
        budgets = budgets or Budgets()
        validation = validate_hypothesis(sym, sample_budget=budgets.sample_budget, seed=seed)
        return cls(build_family(sym, validation, budgets), budgets)

    def abscissae(self) -> np.ndarray:
        """Chebyshev points on (sigma0 + offset, sigma0 + offset + 1/(4k)), ascending."""
        lo = self.sigma0 + self.budgets.laurent_offset
        width = 1.0 / (4.0 * self.k)
        t = chebyshev_points(self.budgets.laurent_samples)
        return np.sort(lo + 0.5 * width * (t + 1.0))

    def exponent(self, zeta: float) -> float:
        return self.k * (2.0 * zeta - 1.0) + self.n - 1.0

    def _check(self, zeta: float) -> None:
        if zeta <= self.sigma0:
            raise OutsideConvergenceRegion(
                f"M(zeta) converges for zeta > {self.sigma0:.4g} (k={self.k}, n={self.n}), got {zeta}"
            )

    def _radial(
        self, ray, functionals: Sequence[BracketFunctional], zetas: np.ndarray, grid: RadialGrid, halve: bool
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Sums and absolute majorants of the radial integrals for every zeta."""
        jacobi = self.budgets.oracle_jacobi_points
        panels = self.budgets.radial_uniform_panels
        if halve:
            jacobi, panels = max(jacobi // 2, 4), max(panels // 2, 1)
        matrix = np.stack([fn.coefficients for fn in functionals], axis=0)
        magnitude = np.abs(matrix)
        exponents = np.array([self.exponent(z) for z in zetas])

        # panels on [r_core, R] are shared by every zeta
        r1, w1 = composite_gauss(
            np.linspace(grid.r_core, grid.radius, panels + 1), self.budgets.radial_uniform_points
        )
        total = np.zeros(len(zetas), dtype=complex)
        majorant = np.zeros(len(zetas))
        for r, w in zip(r1, w1):
            h = ray.derivatives(float(r), 0)[0]
            weight = w * r**exponents
            total += weight * (matrix @ h)
            majorant += weight * (magnitude @ np.abs(h))

        # the r^e singularity at 0 goes into a Gauss-Jacobi weight per zeta
        for i, e in enumerate(exponents):
            r0, w0 = gauss_jacobi_left(0.0, grid.r_core, jacobi, float(e))
            for r, w in zip(r0, w0):
                h = ray.derivatives(float(r), 0)[0]
                total[i] += w * (matrix[i] @ h)
                majorant[i] += w * (magnitude[i] @ np.abs(h))
        prefactor = (2.0 * np.pi) ** (-self.n)
        return prefactor * total, prefactor * majorant

    def sample_batch(self, f: SpectralFunction, zetas: Sequence[float]) -> List[MSample]:
        """M(zeta) for each zeta, with the declared error 10 |M_N - M_{N/2}| + 1e-6 |M|.

        Raises:
            OutsideConvergenceRegion: If some zeta <= sigma0.
            BudgetExceeded: If a declared error exceeds SAMPLE_TOLERANCE relative to |M|.
        """
        zetas = np.asarray(zetas, dtype=float)
        for zeta in zetas:
            self._check(float(zeta))
        functionals = [
            BracketFunctional(self.family, PowerKernel(float(z), self.budgets.oracle_jacobi_points)) for z in zetas
        ]
        ray = f.ray(self.family.points)
        grid = RadialGrid.build(f.sigma_bounds, self.budgets)
        full, majorant = self._radial(ray, functionals, zetas, grid, halve=False)
        half, _ = self._radial(ray, functionals, zetas, grid, halve=True)

        samples = []
        for zeta, value, coarse, scale in zip(zetas, full, half, majorant):
            error = 10.0 * abs(value - coarse) + 1e-6 * abs(value)
            if error > SAMPLE_TOLERANCE * max(abs(value), 1e-8 * scale):
                raise BudgetExceeded(
                    f"M({zeta:.4g}) = {value:.6g} with declared error {error:.2e}; raise the radial budgets"
                )
            samples.append(
                MSample(zeta=float(zeta), value=ComplexValue.of(value), error=float(error), majorant=float(scale))
            )
        logger.debug(f"Sampled M at {len(samples)} abscissae for {getattr(f, 'label', 'f')}")
        return samples

    def sample_M(self, f: SpectralFunction, zeta: float) -> MSample:
        return self.sample_batch(f, [zeta])[0]

    async def sample_many(self, f: SpectralFunction, zetas: Sequence[float], chunks: int = 4) -> List[MSample]:
        """Concurrent ``sample_batch`` over chunks of ``zetas``; results keep the input order."""
        zetas = [float(z) for z in zetas]
        if not zetas:
            return []
        parts = [list(part) for part in np.array_split(np.asarray(zetas), min(chunks, len(zetas)))]
        tasks = [asyncio.to_thread(self.sample_batch, f, part) for part in parts]
        results = await asyncio.gather(*tasks)
        return [sample for part in results for sample in part]

    def fit(self, f: SpectralFunction) -> LaurentFit:
        samples = asyncio.run(self.sample_many(f, self.abscissae()))
        return laurent_fit(
            [(s.zeta, s.value.value) for s in samples],
            max_regular=self.budgets.laurent_max_regular,
            floor=1e-10 * float(np.linalg.norm([s.majorant for s in samples])),
        )


def sample_M(
    sym: HomogeneousSymbol,
    f: SpectralFunction,
    zeta: float,
    budgets: Optional[Budgets] = None,
    seed: Optional[int] = None,
) -> complex:
    """(2 pi)^{-n} integral (p^2)^{zeta-1} p f^ dxi for one zeta in the convergence region."""
    return ContinuationOracle.for_symbol(sym, budgets, seed).sample_M(f, zeta).value.value


def _design(zetas: np.ndarray, pole_order: int, regular_order: int) -> Tuple[np.ndarray, np.ndarray]:
    powers = np.arange(-pole_order, regular_order + 1)
    matrix = zetas[:, None] ** powers[None, :]
    norms = np.linalg.norm(matrix, axis=0)
    return matrix / norms, norms


def _solve(zetas: np.ndarray, values: np.ndarray, d: int, q: int, scale: float) -> Tuple[np.ndarray, float, float]:
    matrix, norms = _design(zetas, d, q)
    coeffs, *_ = np.linalg.lstsq(matrix.astype(complex), values, rcond=None)
    residual = float(np.linalg.norm(matrix @ coeffs - values) / scale) if scale > 0 else 0.0
    return coeffs / norms, residual, float(np.linalg.cond(matrix))


def laurent_fit(
    samples: Sequence[Tuple[float, complex]],
    pole_order_cap: int = 2,
    max_regular: Optional[int] = None,
    tolerance: Optional[float] = None,
    condition_threshold: Optional[float] = None,
    floor: float = 0.0,
) -> LaurentFit:
    """Least-squares model sum_{j=-d}^{q} a_j zeta^j, the first (d, q) in lexicographic order that fits.

    ``floor`` is an absolute scale below which the sample norm does not shrink
    the residual's denominator.

    Raises:
        ValueError: With fewer than 12 samples.
        PoleOrderExceeded: If no model with d <= pole_order_cap fits.
        IllConditionedFit: If the selected design exceeds the condition threshold.
    """
    if len(samples) < 12:
        raise ValueError(f"A Laurent fit needs at least 12 samples, got {len(samples)}")
    max_regular = settings.LAURENT_MAX_REGULAR if max_regular is None else max_regular
    tolerance = settings.LAURENT_FIT_TOLERANCE if tolerance is None else tolerance
    condition_threshold = settings.CONDITION_THRESHOLD if condition_threshold is None else condition_threshold
    zetas = np.array([float(z) for z, _ in samples])
    values = np.array([complex(v) for _, v in samples])
    scale = max(float(np.linalg.norm(values)), floor)
    size = len(samples)

    for d in range(pole_order_cap + 1):
        for q in range(max_regular + 1):
            if d + q + 1 > size - 1:
                break
            coeffs, residual, condition = _solve(zetas, values, d, q, scale)
            if residual > tolerance:
                continue
            if condition > condition_threshold:
                raise IllConditionedFit(f"Model d={d}, q={q} has condition {condition:.2e} > {condition_threshold:.1e}")
            a0 = coeffs[d]
            uncertainty = residual * float(np.max(np.abs(values)))
            if d + q + 2 <= size - 1:
                richer, _, _ = _solve(zetas, values, d, q + 1, scale)
                uncertainty += 2.0 * abs(richer[d] - a0)
            logger.debug(f"Laurent model d={d}, q={q}: a0={a0:.10g}, residual {residual:.2e}, cond {condition:.2e}")
            return LaurentFit(
                abscissae=zetas.tolist(),
                samples=[ComplexValue.of(v) for v in values],
                pole_order=d,
                regular_order=q,
                coefficients=[ComplexValue.of(c) for c in coeffs],
                residual=residual,
                condition=condition,
                a0=ComplexValue.of(a0),
                a0_uncertainty=float(uncertainty),
            )
    raise PoleOrderExceeded(
        f"No Laurent model with pole order <= {pole_order_cap} and <= {max_regular} regular terms "
        f"reaches residual {tolerance:.1e}"
    )


def proof_constants(k: int, dps: int = 40) -> ProofConstants:
    """h(0), 2k h(0), h'(0), m(0), m'(0), m''(0): closed forms against numerical derivatives of the products."""
    if not 1 <= k <= 8:
        raise ValueError(f"Proof constants are tabulated for 1 <= k <= 8, got {k}")
    with mpmath.workdps(dps):
        kk = mpmath.mpf(k)

        def product(zeta):
            out = mpmath.mpf(1)
            for j in range(1, 2 * k):
                out /= 2 * kk * zeta - j
            return out

        def h(zeta):
            return product(zeta) / (2 * kk)

        def m(zeta):
            return product(zeta) / (4 * kk * (2 * zeta - 1))

        euler = mpmath.euler
        psi = mpmath.digamma(2 * kk)
        trigamma = mpmath.psi(1, 2 * kk)
        g2k = mpmath.gamma(2 * kk)
        g1p2k = mpmath.gamma(1 + 2 * kk)
        harmonic = euler + psi
        closed = {
            "h(0)": -1 / mpmath.factorial(2 * k),
            "2k h(0)": -1 / g2k,
            "h'(0)": -harmonic / g2k,
            "m(0)": 1 / (2 * g1p2k),
            "m'(0)": (1 + kk * harmonic) / g1p2k,
            "m''(0)": (
                12
                + kk * (6 * euler * (2 + kk * euler) + kk * mpmath.pi**2)
                + 6 * kk * (psi * (2 + 2 * kk * euler + kk * psi) - kk * trigamma)
            )
            / (3 * g1p2k),
        }
        numerical = {
            "h(0)": h(0),
            "2k h(0)": 2 * kk * h(0),
            "h'(0)": mpmath.diff(h, 0, 1),
            "m(0)": m(0),
            "m'(0)": mpmath.diff(m, 0, 1),
            "m''(0)": mpmath.diff(m, 0, 2),
        }
        values = []
        for name, exact in closed.items():
            error = abs(numerical[name] - exact) / abs(exact)
            values.append(
                ProofConstantValue(
                    name=name,
                    closed_form=float(exact),
                    numerical=float(numerical[name]),
                    relative_error=float(error),
                )
            )
    return ProofConstants(k=k, values=values, max_relative_error=max(v.relative_error for v in values))


def adjudicate(sf: SolutionFunctional, f: SpectralFunction, oracle: Optional[ContinuationOracle] = None) -> Adjudication:
    """Compare the Laurent constant term with both variants of the evaluated pairing."""
    oracle = oracle or ContinuationOracle(sf.family, sf.budgets)
    fit = oracle.fit(f)
    result = sf.evaluate(f)
    theorem = (result.value_theorem or result.value).value
    proof = (result.value_proof or result.value).value
    a0 = fit.a0.value
    # <s, f> may vanish by symmetry; f(0) sets the magnitude then
    f0 = f.value_at_zero
    denominator = max(abs(a0), abs(f0) if f0 is not None else 0.0, 1e-300)
    errors = {"theorem": abs(theorem - a0) / denominator, "proof": abs(proof - a0) / denominator}
    if abs(theorem - proof) <= fit.a0_uncertainty:
        winner = "indistinguishable"
    else:
        winner = min(errors, key=errors.get)  # type: ignore[arg-type]
    label = getattr(f, "label", "f")
    logger.info(
        f"Adjudication {sf.symbol.name}/{label}: a0={a0:.10g} +- {fit.a0_uncertainty:.1e}, "
        f"theorem {errors['theorem']:.2e}, proof {errors['proof']:.2e} -> {winner}"
    )
    return Adjudication(
        symbol=sf.symbol.name,
        test_function=label,
        case=sf.case,
        a0=fit.a0,
        a0_uncertainty=fit.a0_uncertainty,
        theorem_value=ComplexValue.of(theorem),
        proof_value=ComplexValue.of(proof),
        theorem_relative_error=float(errors["theorem"]),
        proof_relative_error=float(errors["proof"]),
        winner=winner,
        pole_minus_one=ComplexValue.of(fit.coefficient(-1)),
        pole_minus_two=ComplexValue.of(fit.coefficient(-2)),
        fit=fit,
    )


def continuity_check(
    sym: HomogeneousSymbol,
    f: SpectralFunction,
    budgets: Optional[Budgets] = None,
    samples: int = 12,
    degree: int = 6,
) -> ContinuityCheck:
    """(2 pi)^{-n} integral p^zeta f^ -> f(0) as zeta -> 0+, for a positive symbol.

    Raises:
        HypothesisViolated: If p is not positive on the sphere.
        ValueError: If f(0) is not known in closed form.
    """
    budgets = budgets or Budgets()
    low, _ = sym.sphere_extrema
    if low <= 0:
        raise HypothesisViolated(f"The continuity check needs p > 0 on the sphere, min p = {low:.3g}")
    target = f.value_at_zero
    if target is None:
        raise ValueError("The continuity check needs a test function with known f(0)")

    quad = build_quadrature(sym.n, budgets.sphere_level(sym.n))
    p = sym.evaluate(quad.nodes)
    grid = RadialGrid.build(f.sigma_bounds, budgets)
    ray = f.ray(quad.nodes)
    sphere = np.stack([ray.derivatives(float(r), 0)[0] for r in grid.nodes], axis=0)

    width = 1.0 / (4.0 * sym.k)
    zetas = np.sort(0.5 * width * (chebyshev_points(samples) + 1.0))
    values = np.empty(samples, dtype=complex)
    for i, zeta in enumerate(zetas):
        angular = sphere @ (quad.weights * p**zeta)
        values[i] = (2.0 * np.pi) ** (-sym.n) * np.sum(grid.weights * grid.nodes ** (sym.k * zeta + sym.n - 1) * angular)

    basis = np.polynomial.chebyshev.chebvander(2.0 * zetas / width - 1.0, degree)
    coeffs, *_ = np.linalg.lstsq(basis.astype(complex), values, rcond=None)
    extrapolated = complex(np.polynomial.chebyshev.chebval(-1.0, coeffs))
    error = abs(extrapolated - complex(target)) / max(abs(complex(target)), 1e-300)
    logger.info(f"Continuity check for {sym.name}: {extrapolated:.10g} vs f(0) = {complex(target):.10g}")
    return ContinuityCheck(
        abscissae=zetas.tolist(),
        values=[ComplexValue.of(v) for v in values],
        extrapolated=ComplexValue.of(extrapolated),
        target=ComplexValue.of(target),
        relative_error=float(error),
    )


def pv_crosscheck(
    sf: SolutionFunctional,
    f: SpectralFunction,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    compare: bool = True,
) -> PrincipalValueCheck:
    """Experimental: (2 pi)^{-n} integral p f^ / (p^2 + delta^2) for decreasing delta, Richardson-extrapolated.

    Raises:
        CaseMismatch: Unless k < n.
        NoConvergenceTrend: If successive extrapolant differences grow throughout.
    """
    n, k = sf.n, sf.k
    if k >= n:
        raise CaseMismatch(f"The principal-value cross-check needs k < n, got k={k}, n={n}")
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 3:
        raise ValueError("The principal-value cross-check needs at least three deltas")
    exponent = min(1.0, (n - k) / k)

    grid = RadialGrid.build(f.sigma_bounds, sf.budgets)
    ray = f.ray(sf.family.points)
    values = np.zeros(len(deltas), dtype=complex)
    majorant = 0.0
    for r, w in zip(grid.nodes, grid.weights):
        h = ray.derivatives(float(r), 0)[0]
        volume = w * r ** (n - 1)
        for i, delta in enumerate(deltas):
            functional = BracketFunctional(sf.family, LorentzKernel(float(r) ** k, delta))
            values[i] += volume * functional(h)
            if i == len(deltas) - 1:
                majorant += volume * float(np.abs(functional.coefficients) @ np.abs(h))
    prefactor = (2.0 * np.pi) ** (-n)
    values *= prefactor
    majorant *= prefactor

    extrapolants = []
    for i in range(len(deltas) - 1):
        t = (deltas[i] / deltas[i + 1]) ** exponent
        extrapolants.append((t * values[i + 1] - values[i]) / (t - 1.0))
    differences = [abs(b - a) for a, b in zip(extrapolants[:-1], extrapolants[1:])]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(differences[:-1], differences[1:])]
    floor = 1e-10 * majorant
    growing = len(differences) >= 2 and all(b > a for a, b in zip(differences[:-1], differences[1:]))
    if growing and differences[-1] > floor:
        raise NoConvergenceTrend(f"Extrapolant differences grow: {', '.join(f'{d:.2e}' for d in differences)}")

    estimate = extrapolants[-1]
    reference = discrepancy = None
    if compare:
        reference = sf.eval_A(f)
        discrepancy = abs(estimate - reference) / max(abs(reference), 1e-300)
        logger.info(f"Principal-value estimate {estimate:.8g} vs eval_A {reference:.8g} (rel. {discrepancy:.2e})")
    return PrincipalValueCheck(
        deltas=deltas,
        values=[ComplexValue.of(v) for v in values],
        extrapolants=[ComplexValue.of(v) for v in extrapolants],
        ratios=[float(x) for x in ratios],
        exponent=exponent,
        estimate=ComplexValue.of(estimate),
        reference=None if reference is None else ComplexValue.of(reference),
        relative_discrepancy=None if discrepancy is None else float(discrepancy),
    )
