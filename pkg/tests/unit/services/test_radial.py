from math import comb, factorial

import numpy as np
import pytest
from numpy.polynomial import Polynomial as P
from scipy.integrate import quad

from fundsol.schemas.run import Budgets
from fundsol.services.errors import NonintegrableAssembly, OrderCapExceeded, TailNotCertified
from fundsol.services.radial import (
    RadialGrid,
    RadialScan,
    assembly_terms,
    boundary_derivative,
    log_weighted_integral,
    radial_moment,
    radial_truncation,
)

# F(r) = exp(q(r)) with q = r - r^2 / 2, so F^(m) = P_m exp(q) with P_{m+1} = P_m' + q' P_m
Q_PRIME = P([1.0, -1.0])


def chain(seed: P, times: int) -> P:
    out = seed
    for _ in range(times):
        out = out.deriv() + Q_PRIME * out
    return out


def F(r):
    return np.exp(r - 0.5 * r * r)


def sampler(r: float, order: int) -> np.ndarray:
    return np.array([[chain(P([1.0]), m)(r) * F(r) for m in range(order + 1)]])


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.build((1.0, 1.0), Budgets())


def test_radial_truncation():
    radius = radial_truncation(1.0, 14)
    assert np.exp(-0.5 * radius**2) < 1e-27
    assert radial_truncation(0.5, 14) == pytest.approx(2.0 * radius)


def test_grid_layout(grid):
    assert grid.r_head < grid.r_core < grid.radius
    assert np.all(grid.nodes > grid.r_head)
    assert np.sum(grid.weights) + grid.r_head == pytest.approx(grid.radius, rel=1e-13)
    assert grid.head(2) == pytest.approx(grid.r_head**3 / 3.0)


@pytest.mark.parametrize("power", [0, 1, 3])
def test_radial_moment(grid, power):
    scan = RadialScan.build(sampler, grid, 0)
    expected, _ = quad(lambda r: r**power * F(r), 0.0, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert radial_moment(scan, power) == pytest.approx(expected, rel=1e-8)


def test_radial_moment_rejects_negative_power(grid):
    scan = RadialScan.build(sampler, grid, 0)
    with pytest.raises(NonintegrableAssembly):
        radial_moment(scan, -1)


@pytest.mark.parametrize("k, n", [(2, 2), (3, 3), (3, 2), (4, 3)])
def test_boundary_derivative(grid, k, n):
    scan = RadialScan.build(sampler, grid, 2 * k)
    # d^{2k-1}(r^{k+n-1} F) at 0 by the chain rule on r^{k+n-1} exp(q)
    direct = chain(P.basis(k + n - 1), 2 * k - 1)(0.0) * F(0.0)
    assert boundary_derivative(scan, k, n) == pytest.approx(direct, rel=1e-12)


def test_boundary_derivative_vanishes_below_the_critical_degree(grid):
    scan = RadialScan.build(sampler, grid, 2)
    assert boundary_derivative(scan, 1, 3) == 0


def test_assembly_terms_are_leibniz():
    # d^4 (r^3 F) = r^3 F'''' + 12 r^2 F''' + 36 r F'' + 24 F'
    assert assembly_terms(2, 2) == [(4, 1.0, 3), (3, 12.0, 2), (2, 36.0, 1), (1, 24.0, 0)]


@pytest.mark.parametrize("k, n", [(2, 2), (3, 3)])
def test_log_weighted_integral(grid, k, n):
    scan = RadialScan.build(sampler, grid, 2 * k)
    integrand = chain(P.basis(k + n - 1), 2 * k)
    g = lambda r: np.log(r) * integrand(r) * F(r)  # noqa: E731
    expected = quad(g, 0.0, 1.0, limit=200)[0] + quad(g, 1.0, 40.0, limit=200)[0]
    # two-point panels on the geometric mesh resolve log r to about 1e-6
    assert log_weighted_integral(scan, k, n) == pytest.approx(expected, rel=1e-5, abs=5e-5)


def test_scan_derivative_and_order_cap(grid):
    scan = RadialScan.build(sampler, grid, 1)
    np.testing.assert_allclose(scan.derivative(1), Q_PRIME(grid.nodes) * F(grid.nodes), rtol=1e-12)
    with pytest.raises(OrderCapExceeded):
        scan.derivative(2)


def test_uncertified_tail(grid):
    with pytest.raises(TailNotCertified):
        RadialScan.build(lambda r, order: np.ones((1, order + 1)), grid, 0)


def test_scan_csv(grid, tmp_path):
    scan = RadialScan.build(sampler, grid, 1, channels=("j1",))
    path = scan.to_csv(tmp_path / "scan.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "r,j1_d0,j1_d0_imag,j1_d1,j1_d1_imag"
    assert len(lines) == 1 + grid.nodes.size
