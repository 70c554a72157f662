"""Entropy-maximizing limit shapes for the pattern family 1, 10, 110, ...

The maximizer of entropy subject to densities of the patterns 1^i 0 has
inverse distribution function H with H'(y) = 1 / (1 - e^{p(y)}) for a
polynomial p with negative constant coefficient.  The forward map Phi
sends p to (rho_{1^i 0})_{i=0..k}; it is invertible on the interior of
the feasible region, and its Jacobian has a closed form evaluated here by
adaptive quadrature.  The inverse solve is a damped Newton iteration with
homotopy continuation from the constant-density solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .measures import StepMeasure, density_of_measure

QUAD_KW = dict(limit=500, epsabs=1e-13, epsrel=1e-12)
COEFF_BLOWUP = 1e4
NEAR_BOUNDARY_GAP = 1e-13


class InfeasibleExponentError(ValueError):
    """The exponent polynomial does not define a valid density."""


class BoundaryShapeError(RuntimeError):
    """Targets sit on (or numerically at) the boundary of the feasible set.

    Boundary optimizers are {0,1}-valued step densities with at most
    k/2 + 1 intervals of value 0, not exponent polynomials; the error
    carries that description instead of a solution.
    """

    def __init__(self, k: int, coeffs=None, detail: str = ""):
        self.k = k
        self.coeffs = None if coeffs is None else tuple(coeffs)
        self.max_zero_intervals = k // 2 + 1
        msg = (
            "targets lie at the feasibility boundary: the optimizer is a "
            f"{{0,1}}-valued step density with at most {self.max_zero_intervals} "
            "intervals of value 0"
        )
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class ExpPolynomial:
    """Coefficients (a_0, ..., a_k) of the exponent p(y) in H'(y)."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise ValueError("degree must be at least 1 (pad with zeros)")
        if not self.coeffs[0] < 0:
            raise InfeasibleExponentError(
                f"constant coefficient must be negative, got {self.coeffs[0]}"
            )
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(y, self.coeffs)

    def first_positive_root(self) -> float:
        """Smallest real root in (0, inf), or +inf when none exists."""
        roots = np.polynomial.polynomial.polyroots(self.coeffs)
        best = math.inf
        for r in roots:
            if abs(r.imag) < 1e-10 and r.real > 1e-14:
                best = min(best, float(r.real))
        return best


def entropy(mu: StepMeasure) -> float:
    """Shannon entropy of the density: integral of S(f(x)) dx, exact per cell."""
    if mu.has_atoms:
        raise ValueError("entropy requires a measure without atoms")
    v = np.clip(mu.values, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -np.where(v > 0, v * np.log(v), 0.0) - np.where(
            v < 1, (1 - v) * np.log(1 - v), 0.0
        )
    return float(mu.widths @ s)


@dataclass
class PhiResult:
    rho1: float
    densities: np.ndarray  # rho_{1^i 0} for i = 0..k


def _hprime(p: ExpPolynomial):
    def hp(y):
        return 1.0 / (1.0 - np.exp(p(y)))

    return hp


def phi_forward(p: ExpPolynomial) -> PhiResult:
    """Densities (rho_{1^i 0})_{i=0..k} of the measure defined by p.

    rho_1 is the first value with integral of H' reaching 1; each density
    is (i+1) * integral of y^i (H'(y) - 1) dy over [0, rho_1].
    """
    hp = _hprime(p)
    y_max = min(1.0, p.first_positive_root())

    def I(t):
        return quad(hp, 0.0, t, **QUAD_KW)[0]

    lo, hi = 0.0, None
    for j in range(1, 120):
        t = y_max * (1.0 - 0.5**j)
        val = I(t)
        if val >= 1.0:
            hi = t
            break
        lo = t
    if hi is None:
        if y_max >= 1.0 and I(1.0) >= 1.0:
            hi = 1.0
        else:
            raise InfeasibleExponentError(
                "integral of H' never reaches 1 before the exponent's zero"
            )
    rho1 = brentq(lambda t: I(t) - 1.0, lo, hi, xtol=1e-15, rtol=8.9e-16)
    gap = 1.0 - math.exp(float(p(rho1)))
    if gap < NEAR_BOUNDARY_GAP:
        raise BoundaryShapeError(p.degree, p.coeffs, detail="H' blows up at rho_1")
    k = p.degree
    dens = np.empty(k + 1)
    for i in range(k + 1):
        integrand = lambda y, i=i: y**i * (hp(y) - 1.0)
        dens[i] = (i + 1) * quad(integrand, 0.0, rho1, **QUAD_KW)[0]
    return PhiResult(rho1=float(rho1), densities=dens)


def phi_jacobian(p: ExpPolynomial, rho1: float | None = None) -> np.ndarray:
    """Closed-form Jacobian d rho_{1^i 0} / d a_j, evaluated by quadrature."""
    if rho1 is None:
        rho1 = phi_forward(p).rho1
    k = p.degree
    c = math.exp(float(p(rho1)))
    jac = np.empty((k + 1, k + 1))

    for i in range(k + 1):
        for j in range(k + 1):
            def integrand(y, i=i, j=j):
                ep = np.exp(p(y))
                return y**j * (y**i - rho1**i * c) * ep / (1.0 - ep) ** 2

            jac[i, j] = (i + 1) * quad(integrand, 0.0, rho1, **QUAD_KW)[0]
    return jac


def reconstruct_density(p: ExpPolynomial, grid_n: int = 4096) -> StepMeasure:
    """The density f on [0,1] defined by p, as exact-ish cell averages.

    F solves F' = f = 1 - e^{p(F)} with F(0) = 0; integrating this ODE on
    the cell edges makes each cell value the exact average of f.
    """
    sol = solve_ivp(
        lambda x, y: 1.0 - np.exp(p(y)),
        (0.0, 1.0),
        [0.0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"density reconstruction failed: {sol.message}")
    edges = np.linspace(0.0, 1.0, grid_n + 1)
    F = sol.sol(edges)[0]
    vals = np.clip(np.diff(F) * grid_n, 0.0, 1.0)
    return StepMeasure(np.full(grid_n, 1.0 / grid_n), vals)


def phi_forward_checked(p: ExpPolynomial, grid_n: int = 16384,
                        tol: float = 1e-8) -> PhiResult:
    """phi_forward plus the mandatory cross-check against the cell DP.

    The reconstructed density must reproduce every rho_{1^i 0} through
    density_of_measure; this pins the multiplicative constants (i+1).
    """
    res = phi_forward(p)
    mu = reconstruct_density(p, grid_n)
    for i, rho in enumerate(res.densities):
        dp = density_of_measure("1" * i + "0", mu)
        if abs(dp - rho) > tol:
            raise AssertionError(
                f"normalization cross-check failed for i={i}: "
                f"quadrature {rho!r} vs cell DP {dp!r}"
            )
    return res


# ---------------------------------------------------------------------------
# inverse problem
# ---------------------------------------------------------------------------


@dataclass
class DensityTargets:
    """Target rho_1 plus pattern-density constraints {i: rho_{1^i 0}}."""

    rho1: float
    tail: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.rho1 < 1.0:
            raise ValueError("rho1 must lie in (0, 1)")
        for i, v in self.tail.items():
            if i < 1:
                raise ValueError("tail constraints are indexed by i >= 1")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"target rho_(1^{i} 0) = {v} outside [0, 1]")

    @property
    def indices(self) -> list[int]:
        return [0] + sorted(self.tail)

    @property
    def degree(self) -> int:
        return max(self.indices) if self.tail else 1

    def vector(self) -> np.ndarray:
        return np.array([1.0 - self.rho1] + [self.tail[i] for i in sorted(self.tail)])

    @classmethod
    def parse(cls, text: str) -> "DensityTargets":
        """Parse 'rho1=0.5,rho110=0.3333' style strings."""
        rho1 = None
        tail: dict[int, float] = {}
        for item in text.split(","):
            key, _, val = item.partition("=")
            key = key.strip().lower()
            value = float(val)
            if key == "rho1":
                rho1 = value
            elif key.startswith("rho") and set(key[3:]) <= {"0", "1"}:
                bits = key[3:]
                if not (bits.endswith("0") and bits.count("0") == 1):
                    raise ValueError(f"unsupported pattern in {item!r}: "
                                     "constraints must be of the form 1..10")
                tail[len(bits) - 1] = value
            else:
                raise ValueError(f"cannot parse target {item!r}")
        if rho1 is None:
            raise ValueError("targets must include rho1")
        return cls(rho1=rho1, tail=tail)


@dataclass
class LimitShapeResult:
    poly: ExpPolynomial
    density: StepMeasure
    entropy: float
    rho1: float
    densities: np.ndarray
    residuals: dict[int, float]
    newton_iterations: int


def _newton_solve(indices, k, target_vec, coeffs0, max_iter=60, tol=1e-11):
    """Damped Newton for Phi_S(a_S) = target on the constrained indices."""
    coeffs = coeffs0.copy()
    idx = np.array(indices)

    def residual(cf):
        res = phi_forward(ExpPolynomial(tuple(cf)))
        return res.densities[idx] - target_vec, res

    r, res = residual(coeffs)
    iters = 0
    for iters in range(1, max_iter + 1):
        if np.max(np.abs(r)) < tol:
            return coeffs, iters
        jac = phi_jacobian(ExpPolynomial(tuple(coeffs)), res.rho1)[np.ix_(idx, idx)]
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise BoundaryShapeError(k, coeffs, detail=str(exc)) from exc
        lam = 1.0
        for _ in range(30):
            cand = coeffs.copy()
            cand[idx] = coeffs[idx] + lam * step
            if cand[0] >= 0:
                lam *= 0.5
                continue
            if np.max(np.abs(cand)) > COEFF_BLOWUP:
                raise BoundaryShapeError(k, cand, detail="coefficients diverge")
            try:
                r2, res2 = residual(cand)
            except (InfeasibleExponentError, BoundaryShapeError):
                lam *= 0.5
                continue
            if np.max(np.abs(r2)) < np.max(np.abs(r)):
                coeffs, r, res = cand, r2, res2
                break
            lam *= 0.5
        else:
            raise RuntimeError("Newton step failed to reduce the residual")
    if np.max(np.abs(r)) < tol:
        return coeffs, iters
    raise RuntimeError(f"Newton did not converge in {max_iter} iterations")


def solve_limit_shape(targets: DensityTargets, grid_n: int = 2000) -> LimitShapeResult:
    """Exponent polynomial, density and entropy matching the targets.

    Homotopy continuation from the constant density at rho_1 (solvable in
    closed form), damped Newton along the path.  The reconstructed density
    must reproduce every constrained target through the cell DP within
    1e-6, refining the output grid if needed.
    """
    indices = targets.indices
    k = max(targets.degree, 1)
    coeffs = np.zeros(k + 1)
    coeffs[0] = math.log(1.0 - targets.rho1)
    idx = np.array(indices)

    start = phi_forward(ExpPolynomial(tuple(coeffs))).densities[idx]
    goal = targets.vector()

    s_done, step = 0.0, 1.0
    iterations = 0
    while s_done < 1.0:
        s_try = min(1.0, s_done + step)
        inter = (1.0 - s_try) * start + s_try * goal
        try:
            coeffs, its = _newton_solve(indices, k, inter, coeffs)
            iterations += its
            s_done = s_try
            step = min(step * 2.0, 1.0)
        except (RuntimeError, InfeasibleExponentError) as exc:
            if isinstance(exc, BoundaryShapeError):
                raise
            step *= 0.5
            if step < 1e-4:
                raise BoundaryShapeError(
                    k, coeffs, detail="homotopy stalled approaching the targets"
                ) from exc

    poly = ExpPolynomial(tuple(coeffs))
    fwd = phi_forward(poly)

    grid = max(grid_n, 2000)
    while True:
        mu = reconstruct_density(poly, grid)
        residuals = {}
        for pos, i in enumerate(indices):
            dp = density_of_measure("1" * i + "0", mu)
            residuals[i] = abs(dp - goal[pos])
        if max(residuals.values()) <= 1e-6 or grid >= 32768:
            break
        grid *= 2
    return LimitShapeResult(
        poly=poly,
        density=mu,
        entropy=entropy(mu),
        rho1=fwd.rho1,
        densities=fwd.densities,
        residuals=residuals,
        newton_iterations=iterations,
    )
