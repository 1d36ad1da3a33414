"""Batch commands behind the ``fundsol`` CLI.

Each ``cmd_*`` takes a loaded ``RunConfig`` and returns a report model; the
CLI writes the JSON and the aligned-text summary. Module errors propagate as
``FundsolError`` and are mapped to exit codes by the caller.
"""

import platform
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import mpmath
import numpy as np
import scipy
from loguru import logger

from .. import __version__
from ..config import settings
from ..schemas.report import (
    CheckResult,
    ComplexValue,
    ConstantsReport,
    ConvergenceRow,
    EvaluationReport,
    LerayReport,
    Provenance,
    ValidationReport,
    VerificationReport,
)
from ..schemas.run import RunConfig, Variant
from ..schemas.symbol import ValidationTolerances
from ..schemas.testfn import TestFunctionSpec
from ..services.errors import FundsolError, NoConvergenceTrend
from ..services.oracle import ContinuationOracle, adjudicate, continuity_check, proof_constants, pv_crosscheck
from ..services.pairing import CUTOFF_SHAPE, log_bracket_scan
from ..services.radial import radial_truncation
from ..services.solution import SolutionFunctional, build_family
from ..services.symbol import HomogeneousSymbol, validate_hypothesis
from ..services.testfn import SpectralTestFunction, from_spec

Report = Union[ValidationReport, EvaluationReport, VerificationReport, ConstantsReport, LerayReport]

# acceptance test-function centers; the n = 2 set keeps the first two coordinates
ACCEPTANCE_CENTERS = ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, -1.0, 1.0))


def load_config(path: Union[Path, str], **overrides) -> RunConfig:
    """Read a config file; keys present in the file win over ``overrides`` (the CLI flags)."""
    path = Path(path)
    raw = RunConfig.model_validate_json(path.read_text()).model_dump(exclude_unset=True)
    merged = {k: v for k, v in overrides.items() if v is not None}
    merged.update(raw)
    config = RunConfig.model_validate(merged)
    if not config.symbol.is_absolute():
        config.symbol = (path.parent / config.symbol).resolve()
    return config


def build_provenance(command: str, config: Optional[RunConfig] = None) -> Provenance:
    config = config or RunConfig(symbol=Path("-"))
    return Provenance(
        package=settings.APP_NAME,
        package_version=__version__,
        python_version=platform.python_version(),
        numpy_version=np.__version__,
        scipy_version=scipy.__version__,
        mpmath_version=mpmath.__version__,
        command=command,
        config=config.model_dump(mode="json"),
        budgets=config.budgets,
        seed=config.seed,
        variant=config.variant,
        cutoff_shape=CUTOFF_SHAPE,
        estimator=config.budgets.estimator,
    )


def load_symbol(config: RunConfig) -> HomogeneousSymbol:
    return HomogeneousSymbol.load(config.symbol)


def load_test_functions(config: RunConfig, n: int) -> List[SpectralTestFunction]:
    specs = config.test_functions or [
        TestFunctionSpec(center=list(center[:n]), sigma=1.0, label=f"g{i}")
        for i, center in enumerate(ACCEPTANCE_CENTERS)
    ]
    return [from_spec(spec) for spec in specs]


def _validate(config: RunConfig, sym: HomogeneousSymbol, raise_on_degenerate: bool = True):
    return validate_hypothesis(
        sym,
        sample_budget=config.budgets.sample_budget,
        tolerances=ValidationTolerances(epsilon_override=config.epsilon_override),
        seed=config.seed,
        raise_on_degenerate=raise_on_degenerate,
    )


def _out_dir(config: RunConfig, command: str) -> Path:
    out = config.out or Path("out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(config: RunConfig) -> ValidationReport:
    """Hypothesis (H), characteristic-set summary and the window radius.

    Raises:
        DegenerateSymbol: If grad p vanishes on the characteristic set.
    """
    sym = load_symbol(config)
    validation = _validate(config, sym)
    return ValidationReport(provenance=build_provenance("validate", config), symbol=sym.to_spec(), validation=validation)


def cmd_eval(config: RunConfig) -> EvaluationReport:
    """<s, f> (and <s_0, f> in case B) for each test function, with the radial scans as CSV."""
    sym = load_symbol(config)
    validation = _validate(config, sym)
    sf = SolutionFunctional(sym, validation, config.budgets, variant=config.variant)
    out = _out_dir(config, "eval")
    results, scan_files = [], []
    for f in load_test_functions(config, sym.n):
        scan = sf.radial_scan(f)
        results.append(sf.evaluate(f, scan=scan))
        scan_files.append(str(scan.to_csv(out / "scans" / f"{f.label}.csv")))
    return EvaluationReport(
        provenance=build_provenance("eval", config),
        symbol=sym.to_spec(),
        validation=validation,
        constants=sf.constants,
        results=results,
        scan_files=scan_files,
    )


def _check(name: str, measured: float, tolerance: float, asserted: bool = True, detail: str = "") -> CheckResult:
    passed = bool(np.isfinite(measured) and measured <= tolerance)
    level = "info" if passed or not asserted else "warning"
    logger.log(level.upper(), f"{name}: {measured:.3e} (tolerance {tolerance:.1e}) -> {'pass' if passed else 'FAIL'}")
    return CheckResult(name=name, passed=passed, measured=float(measured), tolerance=tolerance, asserted=asserted, detail=detail)


def _delta_checks(sf: SolutionFunctional, config: RunConfig, functions: List[SpectralTestFunction]) -> List[CheckResult]:
    checks = []
    for f in functions:
        checks.append(_check(f"delta/{f.label}", sf.delta_residual(f), config.tolerance))
        if sf.case == "B":
            for re, im in config.family_parameters:
                lam = complex(re, im)
                checks.append(_check(f"delta/{f.label}/lambda={lam:g}", sf.delta_residual(f, lam), config.tolerance))
    return checks


def _null_checks(sf: SolutionFunctional, config: RunConfig, functions: List[SpectralTestFunction]) -> List[CheckResult]:
    checks = []
    for f in functions:
        qf = f.apply_symbol(sf.symbol)
        value = abs(sf.eval_null(qf))
        scale = sf.null_scale(qf)
        measured = value / scale if scale > 0 else value
        checks.append(_check(f"null/{f.label}", measured, config.tolerance, detail=f"|<s0, Qf>| = {value:.3e}"))
    return checks


def _homogeneity_checks(
    sf: SolutionFunctional, config: RunConfig, functions: List[SpectralTestFunction]
) -> List[CheckResult]:
    checks = []
    links: List[Tuple[complex, complex, float, float]] = []
    for f in functions:
        fit = sf.quasi_homogeneity(f, config.dilations)
        if sf.case == "A":
            checks.append(_check(f"homogeneity/{f.label}", fit.spread, config.homogeneity_tolerance))
            continue
        checks.append(_check(f"quasi-homogeneity/{f.label}", fit.residual, config.homogeneity_tolerance))
        magnitude = max(abs(fit.intercept.value), abs(f.value_at_zero or 0.0))
        links.append((fit.slope.value, sf.eval_null(f), magnitude, sf.null_scale(f)))

    if links:
        # slope = c <s0, f> with one f-independent c; on symbols with vanishing s0 both sides are 0
        vanishing = [
            abs(slope) <= config.tolerance * max(intercept, 1e-300) and abs(null) <= config.tolerance * max(scale, 1e-300)
            for slope, null, intercept, scale in links
        ]
        if all(vanishing):
            measured = max(abs(slope) / max(intercept, 1e-300) for slope, _, intercept, _ in links)
            checks.append(_check("slope-link", measured, config.tolerance, detail="slope and <s0, f> both vanish"))
        else:
            ratios = np.array([slope / null if null != 0 else np.inf for slope, null, _, _ in links])
            spread = float(np.max(np.abs(ratios - ratios[0])) / max(abs(ratios[0]), 1e-300))
            checks.append(_check("slope-link", spread, 1e-2, detail=f"slope / <s0, f> = {ratios[0]:.6g}"))
    return checks


def _convergence_rows(
    sym: HomogeneousSymbol, config: RunConfig, functions: List[SpectralTestFunction], scales=(1.0, 0.5)
) -> List[ConvergenceRow]:
    rows = []
    for scale in scales:
        budgets = config.budgets.scaled(scale)
        sf = SolutionFunctional(sym, _validate(config, sym), budgets, variant=config.variant)
        for f in functions:
            try:
                measured = sf.delta_residual(f)
            except FundsolError as e:
                logger.opt(exception=e).warning(f"Convergence study at scale {scale} failed for {f.label}")
                measured = float("nan")
            rows.append(ConvergenceRow(budget_scale=scale, check=f"delta/{f.label}", measured=measured))
    return rows


def cmd_verify(config: RunConfig) -> VerificationReport:
    """Delta property, (quasi-)homogeneity, null annihilation and Laurent adjudication as a pass/fail table."""
    sym = load_symbol(config)
    validation = _validate(config, sym)
    functions = load_test_functions(config, sym.n)
    sf = SolutionFunctional(sym, validation, config.budgets, variant=config.variant)

    checks = _delta_checks(sf, config, functions)
    if sf.case == "B":
        checks += _null_checks(sf, config, functions)
    checks += _homogeneity_checks(sf, config, functions)

    oracle = ContinuationOracle(sf.family, sf.budgets)
    adjudications = []
    for f in functions:
        verdict = adjudicate(sf, f, oracle)
        adjudications.append(verdict)
        if config.variant == Variant.BOTH:
            measured = min(verdict.theorem_relative_error, verdict.proof_relative_error)
        elif config.variant == Variant.PROOF:
            measured = verdict.proof_relative_error
        else:
            measured = verdict.theorem_relative_error
        checks.append(_check(f"laurent/{f.label}", measured, config.tolerance, detail=f"winner: {verdict.winner}"))

    if sf.case == "A":
        try:
            pv = pv_crosscheck(sf, functions[0])
            checks.append(
                _check(f"principal-value/{functions[0].label}", pv.relative_discrepancy or 0.0, 5e-2, asserted=False)
            )
        except NoConvergenceTrend as e:
            logger.opt(exception=e).warning("Principal-value cross-check shows no convergence trend")
            checks.append(_check(f"principal-value/{functions[0].label}", float("inf"), 5e-2, asserted=False))

    if validation.empty_characteristic_set and validation.support[0] > 0:
        for f in functions:
            continuity = continuity_check(sym, f, config.budgets)
            checks.append(_check(f"continuity/{f.label}", continuity.relative_error, config.tolerance))

    convergence = _convergence_rows(sym, config, functions) if config.convergence else []
    passed = all(c.passed for c in checks if c.asserted)
    return VerificationReport(
        provenance=build_provenance("verify", config),
        symbol=sym.to_spec(),
        validation=validation,
        checks=checks,
        adjudications=adjudications,
        convergence=convergence,
        passed=passed,
    )


def cmd_constants(config: Optional[RunConfig] = None) -> ConstantsReport:
    """Closed-form proof constants against numerical derivatives, k = 1..8."""
    return ConstantsReport(
        provenance=build_provenance("constants", config), table=[proof_constants(k) for k in range(1, 9)]
    )


def cmd_leray(config: RunConfig) -> LerayReport:
    """Profile of h = f^(r theta) for the first test function, plus a bracket scan over r, as CSV."""
    sym = load_symbol(config)
    validation = _validate(config, sym)
    family = build_family(sym, validation, config.budgets)
    f = load_test_functions(config, sym.n)[0]
    out = _out_dir(config, "leray")

    h = f.ray(family.points).derivatives(config.radius, 0)[0]
    profile = family.profile(h, label=f"{f.label}@r={config.radius:g}")
    profile_file = profile.to_csv(out / "profile.csv")
    radius = radial_truncation(f.sigma_bounds[0], config.budgets.tail_digits)
    scan = log_bracket_scan(family, f, np.linspace(0.0, radius, 65))
    scan_file = scan.to_csv(out / "bracket_scan.csv")
    return LerayReport(
        provenance=build_provenance("leray", config),
        symbol=sym.to_spec(),
        validation=validation,
        radius=config.radius,
        estimator=family.estimator,
        epsilon=family.epsilon,
        eta=family.eta,
        fit_residual=profile.residual,
        total_mass=ComplexValue.of(profile.total_mass()),
        profile_file=str(profile_file),
        scan_file=str(scan_file),
    )


def _complex(value: ComplexValue) -> str:
    if value.imag == 0:
        return f"{value.real:.10g}"
    return f"{value.real:.10g}{value.imag:+.3g}i"


def _rows(rows: List[Tuple[str, ...]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def _summary_validation(report: ValidationReport) -> str:
    v = report.validation
    rows = [
        ("symbol", report.symbol.name or "p"),
        ("n, k", f"{report.symbol.n}, {report.symbol.k}"),
        ("passes (H)", str(v.passes_h)),
        ("empty characteristic set", str(v.empty_characteristic_set)),
        ("zero-set samples", str(len(v.characteristic_samples))),
        ("min |grad_t p|", f"{v.min_tangential_gradient_norm:.4g}"),
        ("epsilon", f"{v.epsilon:.6g}" + (" (override)" if v.epsilon_overridden else "")),
        ("p on the sphere", f"[{v.support[0]:.6g}, {v.support[1]:.6g}]"),
    ]
    rows += [("offending direction", "(" + ", ".join(f"{x:.4f}" for x in d) + ")") for d in v.offending_directions]
    return _rows(rows)


def _summary_eval(report: EvaluationReport) -> str:
    header = ("test function", "case", "<s, f>", "theorem", "proof", "<s0, f>")
    rows = [header]
    for r in report.results:
        rows.append(
            (
                r.test_function,
                r.case,
                _complex(r.value),
                _complex(r.value_theorem) if r.value_theorem else "-",
                _complex(r.value_proof) if r.value_proof else "-",
                _complex(r.null_value) if r.null_value else "-",
            )
        )
    return _rows(rows)


def _summary_verify(report: VerificationReport) -> str:
    rows = [("check", "measured", "tolerance", "result")]
    for c in report.checks:
        verdict = "pass" if c.passed else ("FAIL" if c.asserted else "fail (reported)")
        rows.append((c.name, f"{c.measured:.3e}", f"{c.tolerance:.1e}", verdict))
    text = _rows(rows)
    if report.adjudications:
        table = [("test function", "a0", "theorem err", "proof err", "winner")]
        for a in report.adjudications:
            table.append(
                (
                    a.test_function,
                    _complex(a.a0),
                    f"{a.theorem_relative_error:.2e}",
                    f"{a.proof_relative_error:.2e}",
                    a.winner,
                )
            )
        text += "\n\n" + _rows(table)
    if report.convergence:
        table = [("budget scale", "check", "measured")]
        table += [(f"{row.budget_scale:g}", row.check, f"{row.measured:.3e}") for row in report.convergence]
        text += "\n\n" + _rows(table)
    return text + f"\n\n{'PASSED' if report.passed else 'FAILED'}"


def _summary_constants(report: ConstantsReport) -> str:
    rows = [("k", "constant", "closed form", "numerical", "rel. error")]
    for entry in report.table:
        for v in entry.values:
            rows.append((str(entry.k), v.name, f"{v.closed_form:.15g}", f"{v.numerical:.15g}", f"{v.relative_error:.1e}"))
    return _rows(rows)


def _summary_leray(report: LerayReport) -> str:
    return _rows(
        [
            ("radius", f"{report.radius:g}"),
            ("estimator", report.estimator.value),
            ("epsilon", f"{report.epsilon:.6g}"),
            ("eta", f"{report.eta:.6g}"),
            ("fit residual", f"{report.fit_residual:.3e}"),
            ("total mass", _complex(report.total_mass)),
            ("profile", report.profile_file),
            ("bracket scan", report.scan_file),
        ]
    )


_SUMMARIES: Dict[type, Callable] = {
    ValidationReport: _summary_validation,
    EvaluationReport: _summary_eval,
    VerificationReport: _summary_verify,
    ConstantsReport: _summary_constants,
    LerayReport: _summary_leray,
}


def render_summary(report: Report) -> str:
    """Aligned-text summary of a report."""
    return _SUMMARIES[type(report)](report)


def write_report(report: Report, out: Path, command: str) -> Tuple[Path, Path]:
    """Write ``<command>_report.json`` and ``<command>_summary.txt`` into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{command}_report.json"
    text_path = out / f"{command}_summary.txt"
    json_path.write_text(report.model_dump_json(indent=2))
    text_path.write_text(render_summary(report) + "\n")
    logger.info(f"Report written to {json_path}")
    return json_path, text_path
