"""Feasibility regions for a pattern density at fixed ones-density.

For a non-constant pattern tau with m ones and n zeros, the achievable
densities rho_tau over sublebesgue measures with rho_1 = rho form the
interval [0, C_tau * rho^m (1-rho)^n].  The constant C_tau is the maximum
of a rho-free functional over probability measures g on [0,1]:

    C_tau = k! * integral over {0 < t_1 < ... < t_k < 1} of
            prod over 0-letters of dG(t_i)   (1-letters carry Lebesgue dt)

obtained from the change of variables u = F(x) followed by rescaling the
support to [0,1] and the mass to 1.  This module evaluates the known
closed forms, maximizes the functional numerically on a grid (cells plus
endpoint atoms plus one movable interior atom), builds the explicit
extremal density for tau = 1010, and checks the stationarity laws of the
analytic maximizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import StepMeasure, density_gradient, density_of_measure
from .simplexdp import dp_value, dp_value_grad
from .words import bits_of, check_pattern, complement, reverse

E = math.e


def xi_root(tol: float = 1e-14) -> float:
    """The root of xi * e^xi = e^{-1}, by bisection on [0.1, 0.5]."""
    lo, hi = 0.1, 0.5
    target = math.exp(-1.0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _runs(tau: str) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    for ch in tau:
        if out and out[-1][0] == ch:
            out[-1] = (ch, out[-1][1] + 1)
        else:
            out.append((ch, 1))
    return out


def _check_tau(tau: str) -> str:
    check_pattern(tau)
    if len(set(tau)) < 2:
        raise ValueError(
            f"constant pattern {tau!r} has no feasibility constant (density forced)"
        )
    return tau


def c_closed_form(tau: str) -> float | None:
    """Closed-form C_tau where known; None when no closed form applies.

    C is invariant under reversal and complement, so the pattern is
    canonicalized over those symmetries before matching.  Covered: the
    two-block family 1^k 0^l, the three-block family 1^k 0^l 1^m, and the
    four sporadic length-4/5 cases.  For 11010 the repeated leading ones
    enter the variational kernel as x^2/2!, which puts the constant at
    15 e^{-pi/sqrt(3)} (half the value sometimes quoted without the
    factorial); it matches the numeric maximum and finite-word optima.
    """
    _check_tau(tau)
    for cand in {tau, reverse(tau), complement(tau), reverse(complement(tau))}:
        runs = _runs(cand)
        if len(runs) == 2 and runs[0][0] == "1":
            k, length = runs[0][1], runs[1][1]
            return float(math.comb(k + length, k))
        if len(runs) == 3 and runs[0][0] == "1":
            k, length, m = runs[0][1], runs[1][1], runs[2][1]
            multi = math.factorial(k + length + m) // (
                math.factorial(k) * math.factorial(length) * math.factorial(m)
            )
            return multi * (k**k) * (m**m) / float((k + m) ** (k + m))
        if cand == "1010":
            return 12.0 / E**2
        if cand == "11010":
            return 15.0 * math.exp(-math.pi / math.sqrt(3.0))
        if cand == "10110":
            return 20.0 / 9.0
        if cand == "10101":
            xi = xi_root()
            return 30.0 * xi**2 / (1.0 + xi) ** 2
    return None


# ---------------------------------------------------------------------------
# numeric maximization of the C functional
# ---------------------------------------------------------------------------


class CNumericError(RuntimeError):
    """Optimizer did not converge; carries the best iterate found."""

    def __init__(self, message: str, best_value: float, best_measure: StepMeasure):
        super().__init__(message)
        self.best_value = best_value
        self.best_measure = best_measure


@dataclass
class CNumericResult:
    tau: str
    value: float
    measure: StepMeasure
    grid_n: int
    iterations: int
    converged: bool


class _CProblem:
    """Event assembly and objective/gradient for one tau and grid.

    State vector: [mass at 0, cell masses..., mass at 1] plus an optional
    movable interior atom appended last.  Letters '1' integrate against
    Lebesgue measure (value 1 on cells, excluded from atoms); letters '0'
    integrate against g.
    """

    def __init__(self, tau: str, grid_n: int, interior_pos: float | None = None):
        self.bits = bits_of(tau)
        self.k = len(tau)
        self.kfact = math.factorial(self.k)
        self.grid_n = grid_n
        self.edges = np.linspace(0.0, 1.0, grid_n + 1)
        self.widths = np.diff(self.edges)
        self.interior_pos = interior_pos
        self.n_state = grid_n + 2 + (1 if interior_pos is not None else 0)
        # event layout: [atom0, cells (split at interior pos), atom1(, atomB)]
        if interior_pos is not None:
            i = int(np.searchsorted(self.edges, interior_pos, side="right") - 1)
            i = min(max(i, 0), grid_n - 1)
            self.split_cell = i
            lw = interior_pos - self.edges[i]
            rw = self.edges[i + 1] - interior_pos
            ev_w = np.concatenate(
                [[0.0], self.widths[:i], [max(lw, 0.0), 0.0, max(rw, 0.0)],
                 self.widths[i + 1:], [0.0]]
            )
            self.atom_events = (0, i + 2, len(ev_w) - 1)  # atom0, atomB, atom1
            cell_events = list(range(1, i + 1)) + [i + 1, i + 3] + list(
                range(i + 4, len(ev_w) - 1)
            )
            # cell j of the grid maps to one or two events
            self.cell_to_events = [[cell_events[j]] for j in range(i)]
            self.cell_to_events.append([i + 1, i + 3])
            for j in range(i + 1, grid_n):
                self.cell_to_events.append([cell_events[j + 1]])
        else:
            ev_w = np.concatenate([[0.0], self.widths, [0.0]])
            self.atom_events = (0, None, len(ev_w) - 1)
            self.cell_to_events = [[j + 1] for j in range(grid_n)]
        self.ev_w_template = ev_w

    def _assemble(self, state):
        m0 = state[0]
        cells = state[1 : self.grid_n + 1]
        m1 = state[self.grid_n + 1]
        W = self.ev_w_template.copy()
        V0 = np.ones_like(W)
        V1 = np.ones_like(W)
        a0, ab, a1 = self.atom_events
        W[a0], V1[a0] = m0, 0.0
        W[a1], V1[a1] = m1, 0.0
        if ab is not None:
            W[ab], V1[ab] = state[-1], 0.0
        gvals = cells / self.widths
        for j, evs in enumerate(self.cell_to_events):
            for e in evs:
                V0[e] = gvals[j]
        return W, V0, V1

    def value(self, state) -> float:
        W, V0, V1 = self._assemble(state)
        return self.kfact * dp_value(self.bits, W, V0, V1)

    def value_grad(self, state):
        W, V0, V1 = self._assemble(state)
        val, dW, dV0, dV1 = dp_value_grad(self.bits, W, V0, V1)
        grad = np.zeros_like(state)
        a0, ab, a1 = self.atom_events
        grad[0] = dW[a0]
        grad[self.grid_n + 1] = dW[a1]
        if ab is not None:
            grad[-1] = dW[ab]
        for j, evs in enumerate(self.cell_to_events):
            grad[1 + j] = sum(dV0[e] for e in evs) / self.widths[j]
        return self.kfact * val, self.kfact * grad

    def to_measure(self, state, atom_tol: float = 1e-12) -> StepMeasure:
        cells = np.maximum(state[1 : self.grid_n + 1], 0.0)
        ax, am = [], []
        for pos, idx in ((0.0, 0), (1.0, self.grid_n + 1)):
            if state[idx] > atom_tol:
                ax.append(pos)
                am.append(state[idx])
        if self.interior_pos is not None and state[-1] > atom_tol:
            ax.append(self.interior_pos)
            am.append(state[-1])
        return StepMeasure(self.widths, cells / self.widths, ax, am)


def _eg_ascent(problem: _CProblem, state, max_iters: int, rel_tol: float = 1e-10,
               patience: int = 50):
    """Exponentiated-gradient ascent on the mass simplex with backtracking."""
    state = np.maximum(np.asarray(state, dtype=float), 1e-12)
    state /= state.sum()
    val, grad = problem.value_grad(state)
    eta = 1.0
    stall = 0
    iters = 0
    for iters in range(1, max_iters + 1):
        scale = np.max(np.abs(grad)) + 1e-300
        accepted = False
        for _ in range(60):
            cand = state * np.exp(eta * (grad - grad.max()) / scale)
            s = cand.sum()
            if s <= 0 or not np.isfinite(s):
                eta *= 0.5
                continue
            cand /= s
            v2 = problem.value(cand)
            if v2 >= val:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            return state, val, iters, True
        improvement = v2 - val
        state = cand
        val, grad = problem.value_grad(state)
        eta = min(eta * 1.3, 1e6)
        if improvement <= rel_tol * max(abs(val), 1e-30):
            stall += 1
            if stall >= patience:
                return state, val, iters, True
        else:
            stall = 0
    return state, val, max_iters, False


def _prolong(state, old_n: int, new_n: int):
    """Refine a state vector to a finer grid (cell masses split evenly)."""
    factor = new_n // old_n
    cells = np.repeat(state[1 : old_n + 1] / factor, factor)
    return np.concatenate([[state[0]], cells, [state[old_n + 1]], state[old_n + 2:]])


def _absorb_into_atoms(prob: _CProblem, state, val, window: int = 4):
    """Try collapsing cell mass adjacent to each atom onto the atom itself.

    Multiplicative updates migrate mass between near-equal cells very
    slowly; when the optimum concentrates at a point this jump move
    finishes the job.  Accepted only when the objective does not drop.
    """
    n = prob.grid_n
    candidates = [(0, range(1, 1 + window)), (n + 1, range(n, n - window, -1))]
    if prob.interior_pos is not None:
        j = prob.split_cell
        lo = max(1, 1 + j - window)
        hi = min(n, 1 + j + window)
        candidates.append((len(state) - 1, range(lo, hi + 1)))
    for atom_idx, cell_range in candidates:
        cand = state.copy()
        moved = 0.0
        for ci in cell_range:
            moved += cand[ci]
            cand[ci] = 1e-300
        cand[atom_idx] += moved
        v2 = prob.value(cand)
        if v2 >= val:
            state, val = cand, v2
    return state, val


def c_numeric(
    tau: str,
    grid_n: int,
    seed: int = 0,
    max_iters: int = 8000,
    use_interior_atom: bool = True,
) -> CNumericResult:
    """Numeric maximum of the C functional on a grid of size grid_n.

    Coarse-to-fine continuation (so refining the grid never loses value),
    three starting measures per level, candidate atoms at both endpoints,
    and an optional movable interior atom refined by golden-section around
    the heaviest interior cell.
    """
    _check_tau(tau)
    if len(tau) > 6:
        raise ValueError("numeric C maximization restricted to |tau| <= 6")
    if not 50 <= grid_n <= 5000:
        raise ValueError("grid_n must lie in [50, 5000]")
    rng = np.random.default_rng(seed)

    levels = [
        grid_n // f
        for f in (4, 2, 1)
        if grid_n % f == 0 and grid_n // f >= 50
    ] or [grid_n]
    total_iters = 0
    state = None
    prob = None
    for li, n in enumerate(levels):
        prob = _CProblem(tau, n)
        if state is None:
            x = 0.5 * (prob.edges[:-1] + prob.edges[1:])
            inits = [
                np.concatenate([[0.05], np.full(n, 0.9 / n), [0.05]]),
                np.concatenate([[0.02], 0.8 * (x**2 + 0.1) / np.sum(x**2 + 0.1), [0.18]]),
                np.concatenate([[0.05], 0.9 * rng.random(n) / n, [0.05]]),
            ]
            best = None
            for init in inits:
                st, val, it, _ = _eg_ascent(prob, init, max_iters)
                total_iters += it
                if best is None or val > best[1]:
                    best = (st, val)
            state, val = best
        else:
            state = _prolong(state, levels[li - 1], n)
            state, val, it, _ = _eg_ascent(prob, state, max_iters)
            total_iters += it

    base_state, base_val, base_prob = state, val, prob

    if use_interior_atom:
        cells = state[1 : grid_n + 1]
        x = 0.5 * (base_prob.edges[:-1] + base_prob.edges[1:])
        interior = slice(1, grid_n - 1)
        j = 1 + int(np.argmax(cells[interior]))
        h = 1.0 / grid_n
        lo, hi = max(x[j] - 3 * h, 1e-6), min(x[j] + 3 * h, 1 - 1e-6)

        def atom_solve(b):
            p = _CProblem(tau, grid_n, interior_pos=b)
            init = np.concatenate([state, [0.0]])
            init[-1] = init[1 + j]
            init[1 + j] = 1e-12
            st, v, it, _ = _eg_ascent(p, init, max_iters=1500)
            return v, st, p, it

        gr = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c1, c2 = b - gr * (b - a), a + gr * (b - a)
        f1, f2 = atom_solve(c1), atom_solve(c2)
        total_iters += f1[3] + f2[3]
        best_atom = max((f1, c1), (f2, c2), key=lambda t: t[0][0])
        for _ in range(12):
            if f1[0] < f2[0]:
                a, c1, f1 = c1, c2, f2
                c2 = a + gr * (b - a)
                f2 = atom_solve(c2)
                total_iters += f2[3]
                cand = (f2, c2)
            else:
                b, c2, f2 = c2, c1, f1
                c1 = b - gr * (b - a)
                f1 = atom_solve(c1)
                total_iters += f1[3]
                cand = (f1, c1)
            if cand[0][0] > best_atom[0][0]:
                best_atom = cand
        if best_atom[0][0] > base_val:
            (base_val, base_state, base_prob, _), _ = best_atom

    # collapse smeared mass onto the atoms, then a confirmation ascent on
    # the winning configuration decides convergence
    for _ in range(3):
        prev = base_val
        base_state, base_val = _absorb_into_atoms(base_prob, base_state, base_val)
        base_state, base_val, it, converged = _eg_ascent(
            base_prob, base_state, max_iters=max(max_iters // 2, 2000)
        )
        total_iters += it
        if converged and base_val - prev <= 1e-10 * max(abs(base_val), 1e-30):
            break

    measure = base_prob.to_measure(base_state)
    if not converged:
        raise CNumericError(
            f"c_numeric({tau!r}) did not converge within {max_iters} iterations",
            base_val,
            measure,
        )
    return CNumericResult(
        tau=tau,
        value=float(base_val),
        measure=measure,
        grid_n=grid_n,
        iterations=total_iters,
        converged=True,
    )


# ---------------------------------------------------------------------------
# feasibility intervals
# ---------------------------------------------------------------------------


@dataclass
class FeasibilityInterval:
    tau: str
    rho1: float
    upper: float
    c_value: float
    m_ones: int
    n_zeros: int
    source: str  # 'closed-form' or 'numeric'

    def contains(self, rho_tau: float, slack: float = 0.0) -> bool:
        return -slack <= rho_tau <= self.upper + slack


def feasible_interval(tau: str, rho1: float, grid_n: int = 1000,
                      seed: int = 0) -> FeasibilityInterval:
    """The interval [0, C_tau rho^m (1-rho)^n] of feasible rho_tau values."""
    _check_tau(tau)
    if not 0.0 <= rho1 <= 1.0:
        raise ValueError("rho1 must lie in [0, 1]")
    c = c_closed_form(tau)
    source = "closed-form"
    if c is None:
        c = c_numeric(tau, grid_n, seed=seed).value
        source = "numeric"
    m = tau.count("1")
    nz = tau.count("0")
    upper = c * rho1**m * (1.0 - rho1) ** nz
    return FeasibilityInterval(tau=tau, rho1=rho1, upper=upper, c_value=c,
                               m_ones=m, n_zeros=nz, source=source)


# ---------------------------------------------------------------------------
# the explicit 1010 maximizer
# ---------------------------------------------------------------------------


def extremal_density_1010(rho1: float, grid_n: int = 2000) -> StepMeasure:
    """The unique density maximizing rho_1010 at fixed rho_1.

    Value 1 up to rho/e, an explicit algebraic middle branch, then 0 from
    1 - (1-rho)/e on.  Cells carry exact averages of the closed-form
    distribution function, so the ones-density is exact and the 1010
    density converges at O(grid_n^-2).
    """
    if not 0.0 < rho1 < 1.0:
        raise ValueError("rho1 must lie strictly inside (0, 1)")
    rho = float(rho1)
    xL = rho / E
    xR = 1.0 - (1.0 - rho) / E
    A = 4.0 * rho * (1.0 - rho)
    sqe = math.sqrt(E)

    def s(x):
        return x + rho - 1.0

    def mid_anti(x):
        # antiderivative of the middle branch 0.5*(1 + sqrt(e) s/sqrt(A+e s^2))
        return 0.5 * x + np.sqrt(A + E * s(x) ** 2) / (2.0 * sqe)

    def F(x):
        x = np.asarray(x, dtype=float)
        low = np.minimum(x, xL)
        out = np.where(x <= xL, x, 0.0)
        midx = np.clip(x, xL, xR)
        out = out + np.where(x > xL, xL + mid_anti(midx) - mid_anti(xL), 0.0)
        return out

    edges = np.linspace(0.0, 1.0, grid_n + 1)
    Fe = F(edges)
    values = np.clip(np.diff(Fe) * grid_n, 0.0, 1.0)
    return StepMeasure(np.full(grid_n, 1.0 / grid_n), values)


# ---------------------------------------------------------------------------
# analytic optimizer measures and their stationarity residuals
# ---------------------------------------------------------------------------

EL_PATTERNS = ("1010", "11010", "10110", "10101")


def analytic_aux_measure(tau: str, grid_n: int = 2000) -> StepMeasure:
    """The analytic argmax g of the C functional for the four known cases.

    Continuous parts are sampled at cell midpoints and rescaled so the
    total mass is exactly 1.
    """
    edges = np.linspace(0.0, 1.0, grid_n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    w = np.diff(edges)
    if tau == "1010":
        b = cmass = atom = 1.0 / E
        vals = np.where(mids > b, cmass / mids**2, 0.0)
        atoms = ([1.0], [atom])
    elif tau == "11010":
        om = math.sqrt(3.0) / 2.0
        b = math.exp(-math.pi / (3.0 * math.sqrt(3.0)))
        from scipy.integrate import quad

        raw = lambda a: a**-2.5 * np.cos(om * np.log(a))
        i0 = quad(raw, b, 1.0, epsabs=1e-13)[0]
        c = 1.0 / (i0 + 0.5)
        vals = np.where(mids > b, c * raw(np.maximum(mids, b)), 0.0)
        atoms = ([1.0], [c / 2.0])
    elif tau == "10110":
        vals = np.zeros_like(mids)
        atoms = ([1.0 / 3.0, 1.0], [0.5, 0.5])
    elif tau == "10101":
        xi = xi_root()
        b = xi / (1.0 + xi)
        from scipy.integrate import quad

        raw = lambda x: 1.0 / (x**2 * (1.0 - x) ** 2)
        c = 1.0 / quad(raw, b, 1.0 - b, epsabs=1e-13)[0]
        vals = np.where((mids > b) & (mids < 1.0 - b), c * raw(mids), 0.0)
        atoms = ([], [])
    else:
        raise ValueError(f"no analytic maximizer known for {tau!r}")
    cont = float(vals @ w)
    target = 1.0 - sum(atoms[1])
    if cont > 0:
        vals = vals * (target / cont)
    return StepMeasure(w, vals, atoms[0], atoms[1])


def euler_lagrange_residual(tau: str, g: StepMeasure, trim_cells: int = 3) -> float:
    """Stationarity defect of a candidate maximizer g for the C functional.

    1010:  max |G(a) - (G_total - c/a)| on the support, 2c = int x dG.
    11010: max |2a^2 g'' + 12a g' + 14 g| on the support interior
           (finite differences on the cell midpoints).
    10101: max |2a(1-a) g' + (4-8a) g| on the support interior.
    10110: the optimizer is purely atomic; the residual is the total mass
           of the continuous part.
    """
    if tau not in EL_PATTERNS:
        raise ValueError(f"unsupported pattern {tau!r}; one of {EL_PATTERNS}")
    edges = g.boundaries()
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = g.values
    widths = g.widths

    if tau == "10110":
        return float(vals @ widths)

    support = vals > 1e-12
    if not np.any(support):
        raise ValueError("candidate measure has no continuous part on its support")
    idx = np.where(support)[0]
    lo = edges[idx[0]]
    hi = edges[idx[-1] + 1]

    if tau == "1010":
        # stationarity in integral form: G(a) = G_total - c/a with 2c = int x dG
        cont_x = float((vals * widths) @ mids)
        atom_x = float(g.atom_positions @ g.atom_masses) if g.atom_positions.size else 0.0
        c = 0.5 * (cont_x + atom_x)
        total = g.total_mass()
        span = hi - lo
        a = np.unique(np.concatenate(
            [mids[idx], np.linspace(lo + span / 256, hi - span / 512, 512)]))
        G = g.cdf()(a)
        return float(np.max(np.abs(G - (total - c / a))))

    # differential laws: finite differences on the support samples; coarse
    # candidates are resampled so the law is probed inside the cells too
    if len(idx) >= 64:
        a = mids[idx]
        gv = vals[idx]
    else:
        a = np.linspace(lo + 1e-9, hi - 1e-9, 256)
        gv = np.array([g.value_at(t) for t in a])
    g1 = np.gradient(gv, a, edge_order=2)
    if tau == "11010":
        g2 = np.gradient(g1, a, edge_order=2)
        r = np.abs(2 * a**2 * g2 + 12 * a * g1 + 14 * gv)
    else:  # 10101
        r = np.abs(2 * a * (1 - a) * g1 + (4 - 8 * a) * gv)
    t = min(trim_cells, (len(r) - 1) // 2)
    return float(np.max(r[t : len(r) - t])) if len(r) > 2 * t else float(np.max(r))


# ---------------------------------------------------------------------------
# direct maximization of rho_tau over densities at fixed rho_1
# ---------------------------------------------------------------------------


def max_density_at_rho(
    tau: str,
    rho: float,
    grid_n: int = 160,
    seed: int = 0,
    iters: int = 400,
) -> tuple[float, StepMeasure]:
    """Maximize rho_tau over step densities f with rho_1(f) = rho directly.

    Projected gradient ascent on the cell values ([0,1] box plus the mass
    constraint), independent of the g-space route; used to cross-check the
    scale invariance of the feasibility bound.
    """
    _check_tau(tau)
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    h = 1.0 / grid_n
    bits = bits_of(tau)
    kfact = math.factorial(len(tau))
    widths = np.full(grid_n, h)

    def value(f):
        return kfact * dp_value(bits, widths, 1.0 - f, f)

    def grad(f):
        _, _, dv0, dv1 = dp_value_grad(bits, widths, 1.0 - f, f)
        return kfact * (dv1 - dv0)

    def project(f):
        # bracket wide enough that the shifted clip reaches means 0 and 1
        lo, hi = -float(np.max(f)), 1.0 - float(np.min(f))
        for _ in range(80):
            lam = 0.5 * (lo + hi)
            if np.clip(f + lam, 0.0, 1.0).mean() < rho:
                lo = lam
            else:
                hi = lam
        return np.clip(f + 0.5 * (lo + hi), 0.0, 1.0)

    def step_shape(left: bool):
        f = np.zeros(grid_n)
        n_on = int(round(rho * grid_n))
        if left:
            f[:n_on] = 1.0
        else:
            f[grid_n - n_on:] = 1.0
        return project(f)

    starts = [
        step_shape(True),
        step_shape(False),
        project(np.full(grid_n, rho)),
        project(rng.random(grid_n)),
    ]
    best_val, best_f = -1.0, starts[0]
    for f in starts:
        val = value(f)
        eta = 0.5
        for _ in range(iters):
            df = grad(f)
            improved = False
            for _ in range(40):
                f2 = project(f + eta * df)
                v2 = value(f2)
                if v2 > val:
                    improved = True
                    break
                eta *= 0.5
            if not improved:
                break
            f, val = f2, v2
            eta *= 1.5
        if val > best_val:
            best_val, best_f = val, f
    return float(best_val), StepMeasure(widths, best_f)
