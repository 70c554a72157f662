import math

import numpy as np
import pytest

from patseq.limitshape import (BoundaryShapeError, DensityTargets,
                               ExpPolynomial, InfeasibleExponentError,
                               entropy, phi_forward, phi_forward_checked,
                               phi_jacobian, reconstruct_density,
                               solve_limit_shape)
from patseq.measures import StepMeasure, density_gradient, density_of_measure


def test_entropy_examples():
    assert entropy(StepMeasure.constant(0.5)) == pytest.approx(math.log(2))
    assert entropy(StepMeasure([0.5, 0.5], [1.0, 0.0])) == 0.0
    s14 = -0.25 * math.log(0.25) - 0.75 * math.log(0.75)
    assert entropy(StepMeasure.constant(0.25)) == pytest.approx(s14)
    assert s14 == pytest.approx(0.562335, abs=1e-6)


def test_entropy_rejects_atoms():
    with pytest.raises(ValueError):
        entropy(StepMeasure([1.0], [0.5], [1.0], [0.1]))


def test_exp_polynomial_validation():
    with pytest.raises(InfeasibleExponentError):
        ExpPolynomial((0.5, 1.0))
    with pytest.raises(ValueError):
        ExpPolynomial((-1.0,))
    p = ExpPolynomial((-2.0, 1.0, 0.5))
    assert p.degree == 2
    assert p(0.0) == -2.0


def test_phi_forward_constant():
    p = ExpPolynomial((math.log(0.5), 0.0))
    res = phi_forward(p)
    assert res.rho1 == pytest.approx(0.5, abs=1e-12)
    assert res.densities[0] == pytest.approx(0.5, abs=1e-12)
    assert res.densities[1] == pytest.approx(0.25, abs=1e-12)


def test_phi_forward_logistic_reconstruction():
    p = ExpPolynomial((-1.3, 2.1))
    mu = reconstruct_density(p, 8192)
    a0, b = p.coeffs
    c = math.exp(a0) / (1 - math.exp(a0))
    for x in (0.1, 0.35, 0.6, 0.9):
        assert mu.value_at(x) == pytest.approx(1 / (1 + c * math.exp(b * x)),
                                               abs=1e-5)


def test_phi_forward_saturated_limit():
    res = phi_forward(ExpPolynomial((-30.0, 0.0)))
    assert res.rho1 > 0.999
    assert res.densities[1] < 1e-3


def test_phi_forward_checked_pins_normalization():
    for coeffs in ((-1.3, 2.1), (-2.0, 0.7, -1.1), (-3.0, 1.0, -0.5, 2.0)):
        phi_forward_checked(ExpPolynomial(coeffs))


def test_phi_jacobian_vs_fd_and_sign():
    rng = np.random.default_rng(21)
    for _ in range(3):
        deg = int(rng.integers(1, 4))
        coeffs = np.concatenate([[-rng.uniform(1, 3)],
                                 rng.uniform(-2, 2, deg)])
        p = ExpPolynomial(tuple(coeffs))
        fwd = phi_forward(p)
        jac = phi_jacobian(p, fwd.rho1)
        sign, _ = np.linalg.slogdet(jac)
        assert sign == 1.0
        h = 1e-5
        for j in range(deg + 1):
            up, dn = list(coeffs), list(coeffs)
            up[j] += h
            dn[j] -= h
            col = (phi_forward(ExpPolynomial(tuple(up))).densities
                   - phi_forward(ExpPolynomial(tuple(dn))).densities) / (2 * h)
            assert np.max(np.abs(jac[:, j] - col)) <= 1e-6 * max(
                1.0, np.max(np.abs(jac)))


def test_solve_trivial_constant_density():
    res = solve_limit_shape(DensityTargets(0.5, {1: 0.25}))
    assert res.poly.coeffs[0] == pytest.approx(math.log(0.5), abs=1e-9)
    assert res.poly.coeffs[1] == pytest.approx(0.0, abs=1e-8)
    assert res.entropy == pytest.approx(math.log(2), abs=1e-6)
    assert np.all(np.abs(res.density.values - 0.5) < 1e-7)


def test_solve_reproduces_targets_through_dp():
    res = solve_limit_shape(DensityTargets(0.4, {1: 0.2, 2: 0.12}))
    assert max(res.residuals.values()) <= 1e-6
    mu = res.density
    assert density_of_measure("1", mu) == pytest.approx(0.4, abs=1e-6)
    assert density_of_measure("110", mu) == pytest.approx(0.12, abs=1e-6)


def test_solve_boundary_report():
    # upper boundary of the (rho_1, rho_10) region is 2 rho (1-rho) = 0.5
    with pytest.raises(BoundaryShapeError) as exc:
        solve_limit_shape(DensityTargets(0.5, {1: 0.4995}))
    assert exc.value.max_zero_intervals == 1


def test_boundary_ray_monotonicity():
    coeffs, entropies = [], []
    for t in (0.30, 0.40, 0.45):
        res = solve_limit_shape(DensityTargets(0.5, {1: t}))
        coeffs.append(abs(res.poly.coeffs[1]))
        entropies.append(res.entropy)
    assert coeffs[0] < coeffs[1] < coeffs[2]
    assert entropies[0] > entropies[1] > entropies[2]


def test_round_trip_small():
    rng = np.random.default_rng(31)
    for _ in range(5):
        deg = int(rng.integers(1, 5))
        coeffs = np.concatenate([[-rng.uniform(0.8, 3.5)],
                                 rng.uniform(-2, 2, deg)])
        p = ExpPolynomial(tuple(coeffs))
        fwd = phi_forward(p)
        targets = DensityTargets(1 - fwd.densities[0],
                                 {i: fwd.densities[i] for i in range(1, deg + 1)})
        sol = solve_limit_shape(targets)
        err = np.max(np.abs(np.array(sol.poly.coeffs) - coeffs)
                     / np.maximum(1, np.abs(coeffs)))
        assert err < 1e-6


def test_entropy_optimality_under_constrained_perturbations():
    res = solve_limit_shape(DensityTargets(0.5, {2: 0.30}))
    mu = res.density
    f = mu.values
    base_ent = entropy(mu)
    g_mean = mu.widths.copy()
    g_110 = density_gradient("110", mu)
    A = np.vstack([g_mean, g_110])
    rng = np.random.default_rng(41)
    checked = 0
    for _ in range(200):
        k = rng.standard_normal(f.size)
        lam = np.linalg.lstsq(A @ A.T, A @ k, rcond=None)[0]
        k -= A.T @ lam
        k /= np.max(np.abs(k))
        f2 = np.clip(f + 1e-3 * k, 0.0, 1.0)
        mu2 = StepMeasure(mu.widths, f2)
        drift = max(abs(density_of_measure("1", mu2) - 0.5),
                    abs(density_of_measure("110", mu2) - 0.30))
        if drift <= 1e-6:
            checked += 1
            assert entropy(mu2) <= base_ent + 1e-8
    assert checked >= 30


def test_density_targets_parse():
    t = DensityTargets.parse("rho1=0.5,rho110=0.3333")
    assert t.rho1 == 0.5 and t.tail == {2: 0.3333}
    t = DensityTargets.parse("rho1=0.4,rho10=0.2,rho1110=0.05")
    assert t.tail == {1: 0.2, 3: 0.05}
    with pytest.raises(ValueError):
        DensityTargets.parse("rho110=0.3")
    with pytest.raises(ValueError):
        DensityTargets.parse("rho1=0.5,rho101=0.1")
    with pytest.raises(ValueError):
        DensityTargets(1.5, {})
