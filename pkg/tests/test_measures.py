import math

import numpy as np
import pytest

from patseq.measures import (StepMeasure, density_by_quadrature,
                             density_gradient, density_of_measure,
                             measure_of_word, moment, moments_identity_check,
                             wasserstein, word_convergence_check,
                             word_from_measure)
from patseq.patterns import density as word_density
from patseq.words import all_patterns, random_word


def random_measure(rng, max_cells=10) -> StepMeasure:
    n = int(rng.integers(2, max_cells + 1))
    w = rng.uniform(0.2, 1.0, n)
    return StepMeasure(w / w.sum(), rng.uniform(0.0, 1.0, n))


def riemann_dw(mu1, mu2, n=200_000):
    """Midpoint-rule oracle for the distance integral."""
    x = (np.arange(n) + 0.5) / n
    return float(np.mean(np.abs(mu1.cdf()(x) - mu2.cdf()(x))))


def test_measure_of_word_examples():
    m = measure_of_word("10")
    assert np.allclose(m.widths, [0.5, 0.5]) and np.allclose(m.values, [1, 0])

    m = measure_of_word("0100101")
    assert m.total_mass() == pytest.approx(3 / 7)

    m = measure_of_word("1111")
    assert len(m.widths) == 1 and m.values[0] == 1.0
    assert m.cdf()(0.37) == pytest.approx(0.37)

    with pytest.raises(ValueError):
        measure_of_word("")


def test_wasserstein_examples():
    m1 = StepMeasure([0.5, 0.5], [1, 0])
    m2 = StepMeasure([0.5, 0.5], [0, 1])
    assert wasserstein(m1, m1) == 0.0
    assert wasserstein(m1, m2) == pytest.approx(0.25)


def test_wasserstein_refinement_decreases():
    target = StepMeasure.constant(0.5)
    prev = None
    for k in (1, 2, 4, 8, 16):
        mu = measure_of_word("10" * k)
        d = wasserstein(mu, target)
        if prev is not None:
            assert d < prev
        prev = d


def test_wasserstein_vs_riemann_oracle():
    rng = np.random.default_rng(2)
    for _ in range(8):
        m1, m2 = random_measure(rng), random_measure(rng)
        assert wasserstein(m1, m2) == pytest.approx(riemann_dw(m1, m2),
                                                    abs=1e-9)


def test_wasserstein_metric_properties():
    rng = np.random.default_rng(3)
    for _ in range(25):
        a, b, c = (random_measure(rng) for _ in range(3))
        dab, dba = wasserstein(a, b), wasserstein(b, a)
        assert dab == pytest.approx(dba, abs=1e-14)
        assert dab <= wasserstein(a, c) + wasserstein(c, b) + 1e-12
        assert wasserstein(a, a) == 0.0


def test_density_examples():
    rng = np.random.default_rng(4)
    mu = random_measure(rng)
    assert density_of_measure("1", mu) == pytest.approx(mu.total_mass())

    step = StepMeasure([0.3, 0.7], [1.0, 0.0])
    assert density_of_measure("10", step) == pytest.approx(2 * 0.3 * 0.7)

    assert density_of_measure("1010", StepMeasure.constant(0.5)) == (
        pytest.approx(1 / 16))


def test_density_rejects_atoms():
    mu = StepMeasure([1.0], [0.4], [1.0], [0.6])
    with pytest.raises(ValueError):
        density_of_measure("10", mu)


def test_density_vs_quadrature_oracle():
    rng = np.random.default_rng(6)
    for _ in range(10):
        mu = random_measure(rng, max_cells=6)
        for pat in ("1", "10", "110", "011", "101"):
            dp = density_of_measure(pat, mu)
            qd = density_by_quadrature(pat, mu)
            assert dp == pytest.approx(qd, abs=1e-9)


def test_density_sum_over_patterns_is_one():
    rng = np.random.default_rng(7)
    for k in (1, 2, 3, 4):
        mu = random_measure(rng)
        total = sum(density_of_measure(w, mu) for w in all_patterns(k))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_density_complement_reflection_symmetry():
    rng = np.random.default_rng(8)
    for _ in range(10):
        mu = random_measure(rng)
        flipped = StepMeasure(mu.widths[::-1], (1.0 - mu.values)[::-1])
        for pat in ("10", "110", "1001"):
            comp_rev = "".join("1" if c == "0" else "0" for c in pat)[::-1]
            assert density_of_measure(pat, mu) == pytest.approx(
                density_of_measure(comp_rev, flipped), abs=1e-12)


def test_word_refinement_converges_to_measure_density():
    rng = np.random.default_rng(9)
    host = random_word(12, rng)
    mu = measure_of_word(host)
    for pat in ("10", "110"):
        lim = density_of_measure(pat, mu)
        for k in (2, 4, 8, 16):
            refined = "".join(ch * k for ch in host)
            err = abs(word_density(pat, refined) - lim)
            assert err <= 4 * len(pat) ** 2 / (k * 12)


def test_density_gradient_matches_fd():
    rng = np.random.default_rng(10)
    mu = random_measure(rng, max_cells=6)
    grad = density_gradient("110", mu)
    h = 1e-7
    for i in range(len(mu.values)):
        up = mu.values.copy()
        dn = mu.values.copy()
        up[i] += h
        dn[i] -= h
        fd = (
            density_of_measure("110", StepMeasure(mu.widths, up))
            - density_of_measure("110", StepMeasure(mu.widths, dn))
        ) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)


def test_moment_identity_examples():
    rows = moments_identity_check(StepMeasure.constant(0.5), 1)
    assert rows[1].moment == pytest.approx(0.25)
    assert rows[1].passed

    half = StepMeasure([0.5, 0.5], [1.0, 0.0])
    rows = moments_identity_check(half, 1)
    assert rows[1].moment == pytest.approx(1 / 8)
    assert rows[1].passed

    # n = 0 edge: m_0 = rho_1
    rng = np.random.default_rng(11)
    mu = random_measure(rng)
    rows = moments_identity_check(mu, 0)
    assert rows[0].moment == pytest.approx(mu.total_mass(), abs=1e-12)
    assert rows[0].passed


def test_moment_identity_random():
    rng = np.random.default_rng(12)
    for _ in range(5):
        mu = random_measure(rng, max_cells=5)
        for row in moments_identity_check(mu, 4):
            assert row.passed, f"n={row.n}: {row.moment} vs {row.density_sum}"
    with pytest.raises(ValueError):
        moments_identity_check(mu, 7)


def test_moment_exactness():
    mu = StepMeasure([0.25, 0.75], [1.0, 0.2])
    # int x^2 f dx = int_0^{1/4} x^2 + 0.2 int_{1/4}^1 x^2
    expect = (0.25**3) / 3 + 0.2 * (1 - 0.25**3) / 3
    assert moment(mu, 2) == pytest.approx(expect, abs=1e-15)


def test_word_from_measure_round():
    w = word_from_measure(StepMeasure.constant(0.5), 8)
    assert w == "10101010"
    shape = StepMeasure([0.5, 0.5], [1.0, 0.0])
    assert word_from_measure(shape, 6) == "111000"


def test_word_convergence_check_rounded():
    mu = StepMeasure.constant(0.5)
    hosts = [word_from_measure(mu, n) for n in (16, 64, 256, 1024)]
    rows = word_convergence_check(hosts, mu, ["10"])
    dws = [r.d_wasserstein for r in rows]
    errs = [r.density_errors["10"] for r in rows]
    assert all(d1 >= d2 for d1, d2 in zip(dws, dws[1:]))
    assert errs[-1] < 1e-3 and abs(errs[-1]) <= errs[0] + 1e-12
    constant_hosts = ["1" * n for n in (4, 16, 64)]
    rows = word_convergence_check(constant_hosts, StepMeasure.constant(1.0),
                                  ["1"])
    assert all(r.d_wasserstein == pytest.approx(0.0, abs=1e-12) for r in rows)


def test_word_convergence_sampled_rate():
    rng = np.random.default_rng(13)
    mu = StepMeasure([0.4, 0.6], [0.8, 0.3])
    sizes = [100, 400, 1600, 6400]
    hosts = [word_from_measure(mu, n, mode="sample", rng=rng) for n in sizes]
    rows = word_convergence_check(hosts, mu, ["10"])
    dws = [r.d_wasserstein for r in rows]
    # O(n^{-1/2}): quadrupling n should roughly halve d_W; generous slack
    assert dws[-1] < dws[0] / 3
    assert dws[-1] < 0.02


def test_measure_json_roundtrip():
    mu = StepMeasure([0.3, 0.7], [1.0, 0.25], [0.5, 1.0], [0.1, 0.2])
    back = StepMeasure.from_json(mu.to_json())
    assert np.allclose(back.widths, mu.widths)
    assert np.allclose(back.values, mu.values)
    assert np.allclose(back.atom_masses, mu.atom_masses)


def test_measure_validation():
    with pytest.raises(ValueError):
        StepMeasure([0.5, 0.4], [1, 0])  # widths sum != 1
    with pytest.raises(ValueError):
        StepMeasure([0.5, 0.5], [1, -0.2])  # negative value
    with pytest.raises(ValueError):
        StepMeasure([1.0], [0.5], [1.5], [0.1])  # atom outside [0,1]


def test_canonical_merge():
    mu = StepMeasure([0.25, 0.25, 0.5], [0.3, 0.3, 0.8])
    assert len(mu.widths) == 2
    assert mu.widths[0] == pytest.approx(0.5)
