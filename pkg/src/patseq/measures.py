"""Step measures on [0,1] as limit objects of binary words.

A StepMeasure is a piecewise-constant density on [0,1] (cells of positive
width summing to one) plus optional point atoms.  Densities of binary
words are {0,1}-valued step functions; the atoms only ever appear in the
auxiliary optimizer measures of the feasibility module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .simplexdp import dp_value, dp_value_grad
from .words import bits_of, check_pattern, check_word

MERGE_TOL = 1e-12
WIDTH_SUM_TOL = 1e-12


class StepMeasure:
    """Piecewise-constant measure on [0,1] with optional point atoms."""

    def __init__(self, widths, values, atom_positions=(), atom_masses=()):
        widths = np.asarray(widths, dtype=float)
        values = np.asarray(values, dtype=float)
        if widths.ndim != 1 or widths.shape != values.shape or widths.size == 0:
            raise ValueError("widths and values must be matching 1-d arrays")
        if np.any(widths <= 0):
            raise ValueError("cell widths must be positive")
        if abs(widths.sum() - 1.0) > WIDTH_SUM_TOL * max(1, widths.size):
            raise ValueError(f"cell widths must sum to 1, got {widths.sum()!r}")
        if np.any(~np.isfinite(values)) or np.any(values < -1e-15):
            raise ValueError("cell values must be finite and nonnegative")
        ax = np.asarray(atom_positions, dtype=float)
        am = np.asarray(atom_masses, dtype=float)
        if ax.shape != am.shape:
            raise ValueError("atom positions and masses must match")
        if ax.size and (np.any(ax < 0) or np.any(ax > 1) or np.any(am < 0)):
            raise ValueError("atoms must sit in [0,1] with nonnegative mass")
        order = np.argsort(ax) if ax.size else slice(None)
        self.widths, self.values = self._merged(widths, np.maximum(values, 0.0))
        self.atom_positions = ax[order] if ax.size else ax
        self.atom_masses = am[order] if ax.size else am

    @staticmethod
    def _merged(widths, values):
        # canonical form: adjacent cells with equal values are merged
        out_w, out_v = [widths[0]], [values[0]]
        for w, v in zip(widths[1:], values[1:]):
            if abs(v - out_v[-1]) <= MERGE_TOL:
                out_w[-1] += w
            else:
                out_w.append(w)
                out_v.append(v)
        return np.asarray(out_w), np.asarray(out_v)

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_word(cls, host: str) -> "StepMeasure":
        check_word(host, "host")
        if not host:
            raise ValueError("empty word has no associated measure")
        n = len(host)
        return cls(np.full(n, 1.0 / n), bits_of(host).astype(float))

    @classmethod
    def constant(cls, value: float) -> "StepMeasure":
        return cls([1.0], [float(value)])

    @classmethod
    def from_values(cls, values) -> "StepMeasure":
        values = np.asarray(values, dtype=float)
        return cls(np.full(values.size, 1.0 / values.size), values)

    @classmethod
    def from_json(cls, text: str) -> "StepMeasure":
        obj = json.loads(text)
        cells = obj["cells"]
        atoms = obj.get("atoms", [])
        return cls(
            [c["w"] for c in cells],
            [c["v"] for c in cells],
            [a["x"] for a in atoms],
            [a["m"] for a in atoms],
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "cells": [
                    {"w": float(w), "v": float(v)}
                    for w, v in zip(self.widths, self.values)
                ],
                "atoms": [
                    {"x": float(x), "m": float(m)}
                    for x, m in zip(self.atom_positions, self.atom_masses)
                ],
            }
        )

    # -- basic queries ----------------------------------------------------

    @property
    def has_atoms(self) -> bool:
        return self.atom_positions.size > 0 and self.atom_masses.sum() > 0

    def is_sublebesgue(self, tol: float = 1e-12) -> bool:
        return (not self.has_atoms) and bool(np.all(self.values <= 1 + tol))

    def total_mass(self) -> float:
        return float(self.widths @ self.values + self.atom_masses.sum())

    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.widths)])

    def value_at(self, x: float) -> float:
        """Density value on the cell containing x (x not on a boundary)."""
        edges = self.boundaries()
        i = int(np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(self.values) - 1))
        return float(self.values[i])

    def cdf(self) -> "DistributionFunction":
        return DistributionFunction.of(self)

    def __repr__(self) -> str:
        return (
            f"StepMeasure({len(self.widths)} cells, mass={self.total_mass():.6g},"
            f" atoms={len(self.atom_positions)})"
        )


@dataclass
class DistributionFunction:
    """Right-continuous F(x) = mu([0,x]): piecewise linear with jumps."""

    xs: np.ndarray        # breakpoints, including 0 and 1
    f_right: np.ndarray   # F(x+) at each breakpoint
    slopes: np.ndarray    # density on each interval (len(xs) - 1)

    @classmethod
    def of(cls, mu: StepMeasure) -> "DistributionFunction":
        xs = mu.boundaries()
        if mu.atom_positions.size:
            xs = np.unique(np.concatenate([xs, mu.atom_positions]))
        f_right = np.empty_like(xs)
        slopes = np.empty(len(xs) - 1)
        acc = 0.0
        # atoms exactly at 0 count immediately (F right-continuous)
        acc += mu.atom_masses[mu.atom_positions == xs[0]].sum()
        f_right[0] = acc
        for i in range(len(xs) - 1):
            v = mu.value_at(0.5 * (xs[i] + xs[i + 1]))
            slopes[i] = v
            acc += v * (xs[i + 1] - xs[i])
            acc += mu.atom_masses[mu.atom_positions == xs[i + 1]].sum()
            f_right[i + 1] = acc
        return cls(xs=xs, f_right=f_right, slopes=slopes)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        base = self.f_right[idx] + self.slopes[idx] * (x - self.xs[idx])
        # beyond the last breakpoint F is constant
        return np.where(x >= self.xs[-1], self.f_right[-1], base)

    def left_limit(self, i: int) -> float:
        """F(xs[i]-): value just before breakpoint i."""
        if i == 0:
            return 0.0
        return float(self.f_right[i - 1] + self.slopes[i - 1] * (self.xs[i] - self.xs[i - 1]))


def measure_of_word(host: str) -> StepMeasure:
    """The step measure of a word: n equal cells valued by the bits."""
    return StepMeasure.from_word(host)


def wasserstein(mu1: StepMeasure, mu2: StepMeasure) -> float:
    """Exact integral of |F1 - F2| over [0,1].

    The integrand is piecewise linear on the merged breakpoint grid; sign
    changes are handled by solving the linear crossing on each piece.
    """
    F1, F2 = mu1.cdf(), mu2.cdf()
    xs = np.unique(np.concatenate([F1.xs, F2.xs]))
    a = xs[:-1]
    b = xs[1:]
    h = b - a
    d0 = F1(a) - F2(a)
    mid = 0.5 * (a + b)
    slope = np.array([mu1.value_at(x) - mu2.value_at(x) for x in mid])
    d1 = d0 + slope * h
    same = d0 * d1 >= 0
    area_same = 0.5 * h * (np.abs(d0) + np.abs(d1))
    denom = np.abs(d0) + np.abs(d1)
    denom = np.where(denom == 0, 1.0, denom)
    area_cross = 0.5 * h * (d0 * d0 + d1 * d1) / denom
    return float(np.sum(np.where(same, area_same, area_cross)))


def density_of_measure(pattern: str, mu: StepMeasure) -> float:
    """Limit pattern density of a measure: the ordered-simplex integral.

    Exact for piecewise-constant densities (cell dynamic program); rejects
    measures with atoms, which are not sublebesgue objects.
    """
    check_pattern(pattern)
    if mu.has_atoms:
        raise ValueError("density_of_measure requires a measure without atoms")
    bits = bits_of(pattern)
    v = np.clip(mu.values, 0.0, 1.0)
    val = dp_value(bits, mu.widths, 1.0 - v, v)
    return float(math.factorial(len(pattern)) * val)


def density_gradient(pattern: str, mu: StepMeasure) -> np.ndarray:
    """d rho_w / d(cell values), one entry per cell of mu."""
    check_pattern(pattern)
    if mu.has_atoms:
        raise ValueError("density_gradient requires a measure without atoms")
    bits = bits_of(pattern)
    v = np.clip(mu.values, 0.0, 1.0)
    _, _, dv0, dv1 = dp_value_grad(bits, mu.widths, 1.0 - v, v)
    return math.factorial(len(pattern)) * (dv1 - dv0)


def density_by_quadrature(pattern: str, mu: StepMeasure, tol: float = 1e-10) -> float:
    """Adaptive-quadrature oracle for the simplex integral, k <= 3 only.

    Kept independent of the dynamic program; nested scipy quadrature with
    the cell boundaries as explicit breakpoints.
    """
    check_pattern(pattern)
    if len(pattern) > 3:
        raise ValueError("quadrature oracle limited to patterns of length <= 3")
    if mu.has_atoms:
        raise ValueError("quadrature oracle requires a measure without atoms")
    edges = mu.boundaries()

    def g(letter: str, x: float) -> float:
        v = mu.value_at(x)
        return v if letter == "1" else 1.0 - v

    def nested(i: int, upper: float) -> float:
        letter = pattern[i]
        if i == 0:
            fn = lambda x: g(letter, x)
        else:
            fn = lambda x: g(letter, x) * nested(i - 1, x)
        pts = [e for e in edges if 0 < e < upper]
        val, _ = quad(fn, 0.0, upper, points=pts or None, limit=200,
                      epsabs=tol, epsrel=tol)
        return val

    return math.factorial(len(pattern)) * nested(len(pattern) - 1, 1.0)


def moment(mu: StepMeasure, n: int) -> float:
    """n-th moment of the density: integral of x^n f(x) dx (exact per cell)."""
    edges = mu.boundaries()
    a, b = edges[:-1], edges[1:]
    return float(np.sum(mu.values * (b ** (n + 1) - a ** (n + 1))) / (n + 1))


@dataclass
class MomentCheck:
    n: int
    moment: float
    density_sum: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.moment - self.density_sum) <= self.tol


def moments_identity_check(mu: StepMeasure, n_max: int, tol: float = 1e-9) -> list[MomentCheck]:
    """Verify m_n = (1/(n+1)) * sum over w in {0,1}^n of rho_{w1}(mu).

    The moment side is exact cell arithmetic; the density side goes
    through the simplex dynamic program for every pattern w1.
    """
    if n_max > 6:
        raise ValueError("n_max capped at 6 (2^n patterns per moment)")
    out = []
    for n in range(0, n_max + 1):
        rho_sum = 0.0
        for i in range(2**n):
            w = format(i, f"0{n}b") if n else ""
            rho_sum += density_of_measure(w + "1", mu)
        out.append(MomentCheck(n=n, moment=moment(mu, n),
                               density_sum=rho_sum / (n + 1), tol=tol))
    return out


def word_from_measure(mu: StepMeasure, n: int, mode: str = "round", rng=None) -> str:
    """A length-n word approximating mu.

    mode 'round': greedy rounding of n*F(i/n) (deterministic; exact ones
    count up to rounding of the total mass).  mode 'sample': independent
    Bernoulli bits with the cell-averaged density.
    """
    if mu.has_atoms:
        raise ValueError("word approximation requires a measure without atoms")
    F = mu.cdf()
    grid = np.arange(n + 1) / n
    Fg = F(grid)
    if mode == "round":
        s = np.floor(n * Fg + 0.5).astype(int)
        bits = np.diff(s)
    elif mode == "sample":
        if rng is None:
            rng = np.random.default_rng()
        p = np.diff(Fg) * n  # cell-averaged density
        bits = (rng.random(n) < p).astype(int)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return "".join("1" if b else "0" for b in np.clip(bits, 0, 1))


@dataclass
class ConvergenceRow:
    n: int
    d_wasserstein: float
    density_errors: dict[str, float]


def word_convergence_check(hosts, mu: StepMeasure, patterns) -> list[ConvergenceRow]:
    """Distances d_W(mu_X, mu) and density gaps per pattern, per host."""
    from .patterns import density as word_density

    rows = []
    for host in hosts:
        mx = measure_of_word(host)
        errs = {
            w: abs(word_density(w, host) - density_of_measure(w, mu))
            for w in patterns
        }
        rows.append(ConvergenceRow(n=len(host), d_wasserstein=wasserstein(mx, mu),
                                   density_errors=errs))
    return rows
