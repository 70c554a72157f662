import math

import numpy as np
import pytest

from patseq.feasibility import (EL_PATTERNS, analytic_aux_measure,
                                c_closed_form, c_numeric,
                                euler_lagrange_residual,
                                extremal_density_1010, feasible_interval,
                                max_density_at_rho, xi_root)
from patseq.measures import StepMeasure, density_of_measure

E = math.e

TABLE = {
    "10": 2.0,
    "1100": 6.0,
    "1101": 24 / 2 * 4 / 27,  # 1^2 0 1: multinomial(4;2,1,1) * 2^2/3^3
    "1010": 12 / E**2,
    "11010": 15 * math.exp(-math.pi / math.sqrt(3)),
    "10110": 20 / 9,
    "10101": None,  # fixed below via the xi root
}


def test_xi_root():
    xi = xi_root()
    assert xi * math.exp(xi) == pytest.approx(math.exp(-1), abs=1e-13)
    assert xi == pytest.approx(0.278465, abs=2e-6)


def test_closed_forms():
    xi = xi_root()
    TABLE["10101"] = 30 * xi**2 / (1 + xi) ** 2
    for tau, val in TABLE.items():
        assert c_closed_form(tau) == pytest.approx(val, rel=1e-12), tau
    assert c_closed_form("1010") == pytest.approx(1.624023, abs=1e-6)
    assert c_closed_form("10101") == pytest.approx(1.42326, abs=1e-4)


def test_closed_form_symmetries():
    # C is invariant under reversal and complement
    assert c_closed_form("0101") == c_closed_form("1010")
    assert c_closed_form("01011") == c_closed_form("11010")
    assert c_closed_form("0011") == 6.0
    assert c_closed_form("011") == c_closed_form("100")


def test_closed_form_unknown_and_invalid():
    assert c_closed_form("110100") is None
    with pytest.raises(ValueError):
        c_closed_form("1111")


def test_c_numeric_quick():
    res = c_numeric("10", 200, seed=0)
    assert res.value == pytest.approx(2.0, rel=5e-3)
    assert res.converged
    # argmax concentrates at 1
    m = res.measure
    assert m.atom_positions.size and m.atom_positions[-1] == 1.0
    assert m.atom_masses[-1] > 0.9


def test_c_numeric_grid_monotone():
    vals = [c_numeric("10", g, seed=0).value for g in (100, 200, 400)]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo - 1e-12


def test_c_numeric_validation():
    with pytest.raises(ValueError):
        c_numeric("0000", 200)
    with pytest.raises(ValueError):
        c_numeric("10", 10)
    with pytest.raises(ValueError):
        c_numeric("1010101", 200)


def test_feasible_interval_examples():
    iv = feasible_interval("10", 0.3)
    assert iv.upper == pytest.approx(2 * 0.3 * 0.7)
    assert iv.source == "closed-form"
    assert iv.m_ones == 1 and iv.n_zeros == 1

    iv = feasible_interval("1010", 0.5)
    assert iv.upper == pytest.approx(3 / (4 * E**2))

    iv = feasible_interval("10", 0.0)
    assert iv.upper == 0.0

    with pytest.raises(ValueError):
        feasible_interval("111", 0.5)
    with pytest.raises(ValueError):
        feasible_interval("10", 1.5)


def test_feasibility_interval_consistency():
    # upper = C * rho^m (1-rho)^n within 1e-12 of the module's C
    for tau in ("10", "1010", "1100"):
        c = c_closed_form(tau)
        for rho in (0.2, 0.5, 0.8):
            iv = feasible_interval(tau, rho)
            expect = c * rho ** iv.m_ones * (1 - rho) ** iv.n_zeros
            assert iv.upper == pytest.approx(expect, abs=1e-12)


def test_extremal_density_values():
    mu = extremal_density_1010(0.3, grid_n=2000)
    assert density_of_measure("1", mu) == pytest.approx(0.3, abs=1e-6)
    target = (12 / E**2) * 0.3**2 * 0.7**2
    assert density_of_measure("1010", mu) == pytest.approx(target, abs=1e-4)
    # left branch is identically 1 up to rho/e
    assert mu.value_at(0.3 / E - 0.01) == pytest.approx(1.0, abs=1e-9)
    # right branch vanishes after 1-(1-rho)/e
    assert mu.value_at(1 - 0.7 / E + 0.01) == pytest.approx(0.0, abs=1e-9)


def test_extremal_density_small_rho():
    mu = extremal_density_1010(0.01, grid_n=1000)
    assert density_of_measure("1010", mu) < 1e-3


def test_extremal_density_validation():
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            extremal_density_1010(bad)


def test_extremal_beats_block_arrangement_limit():
    mu = extremal_density_1010(0.5, grid_n=2000)
    blocks = StepMeasure([0.25, 0.25, 0.25, 0.25], [1.0, 0.0, 1.0, 0.0])
    assert density_of_measure("1010", mu) > density_of_measure("1010", blocks)


def project_to_rho(values, rho):
    lo, hi = -1.5, 1.5
    for _ in range(60):
        lam = 0.5 * (lo + hi)
        if np.clip(values + lam, 0, 1).mean() < rho:
            lo = lam
        else:
            hi = lam
    return np.clip(values + 0.5 * (lo + hi), 0, 1)


def test_upper_bound_sanity():
    """Random sublebesgue densities never beat the feasibility bound."""
    rng = np.random.default_rng(14)
    xi = xi_root()
    taus = {"10": 2.0, "1100": 6.0, "1101": TABLE["1101"], "1010": 12 / E**2,
            "11010": 15 * math.exp(-math.pi / math.sqrt(3)),
            "10110": 20 / 9, "10101": 30 * xi**2 / (1 + xi) ** 2}
    widths = np.full(12, 1 / 12)
    for tau, c in taus.items():
        m, nz = tau.count("1"), tau.count("0")
        for rho in np.linspace(0.05, 0.95, 20):
            bound = c * rho**m * (1 - rho) ** nz
            for _ in range(500 // 20):
                f = project_to_rho(rng.uniform(0, 1, 12), rho)
                mu = StepMeasure(widths, f)
                assert density_of_measure(tau, mu) <= bound + 1e-9


def test_scale_invariance_of_direct_maximum():
    """max rho_tau at fixed rho, divided by rho^m (1-rho)^n, is constant."""
    for tau in ("110", "1010"):
        m, nz = tau.count("1"), tau.count("0")
        ratios = []
        for rho in (0.2, 0.35, 0.5, 0.65, 0.8):
            val, _ = max_density_at_rho(tau, rho, grid_n=120, seed=1)
            ratios.append(val / (rho**m * (1 - rho) ** nz))
        spread = (max(ratios) - min(ratios)) / max(ratios)
        assert spread < 0.01, (tau, ratios)
        # and the constant is the table constant, up to discretization
        assert max(ratios) == pytest.approx(c_closed_form(tau), rel=0.02)


def test_el_residual_analytic_argmaxes():
    for tau in EL_PATTERNS:
        g = analytic_aux_measure(tau, 2000)
        assert g.total_mass() == pytest.approx(1.0, abs=1e-10)
        assert euler_lagrange_residual(tau, g) < 1e-3, tau


def test_el_residual_flags_non_stationary():
    uniform = StepMeasure([1.0], [1.0])
    assert euler_lagrange_residual("1010", uniform) > 0.05
    assert euler_lagrange_residual("11010", uniform) > 0.05
    assert euler_lagrange_residual("10101", uniform) > 0.05
    assert euler_lagrange_residual("10110", uniform) == pytest.approx(1.0)


def test_el_residual_validation():
    with pytest.raises(ValueError):
        euler_lagrange_residual("1001", StepMeasure([1.0], [1.0]))
