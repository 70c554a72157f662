"""MCMC sampling of binary words under exponentially tilted measures.

The stationary weight of a word X of length n is exp(n * sum_i a_i *
rho_{w_i}(X)): the extensive scaling keeps the multipliers O(1) as n
grows.  A sweep makes one Metropolis proposal per site in scan order
(bit flips, mixed 4:1 with adjacent transpositions, which preserve the
ones count and help mixing under near-hard constraints); pattern-count
deltas are exact integers from prefix/suffix subsequence tables, O(m)
per proposal amortized.  Chains are deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .measures import StepMeasure, wasserstein
from .words import bits_of, check_pattern, word_of_bits

SWAP_SHARE = 0.2  # fraction of proposals that are adjacent transpositions


@dataclass
class GibbsSpec:
    """Chain specification: length, tilted patterns, multipliers, schedule."""

    n: int
    patterns: tuple[str, ...]
    multipliers: tuple[float, ...]
    seed: int = 0
    sweeps: int = 200
    burn_in_sweeps: int = 100
    checkpoints: int = 64

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("chain length must be at least 8")
        if not 1 <= len(self.patterns) <= 4:
            raise ValueError("between 1 and 4 tilted patterns")
        if len(self.multipliers) != len(self.patterns):
            raise ValueError("one multiplier per pattern")
        for p in self.patterns:
            check_pattern(p)
            if len(p) > 5:
                raise ValueError("tilted patterns are capped at length 5")
        self.patterns = tuple(self.patterns)
        self.multipliers = tuple(float(a) for a in self.multipliers)


@dataclass
class ChainStats:
    mean_densities: dict[str, float]
    acceptance_rate: float
    fhat: StepMeasure
    dw_trace: list[tuple[int, float]]
    drift_ok: bool
    sweeps: int
    checkpoint_densities: np.ndarray = field(repr=False)


@njit(cache=True)
def _count_dp(bits, pat, m):
    n = bits.shape[0]
    dp = np.zeros(m + 1, dtype=np.int64)
    dp[0] = 1
    for t in range(n):
        for j in range(m, 0, -1):
            if pat[j - 1] == bits[t]:
                dp[j] += dp[j - 1]
    return dp[m]


@njit(cache=True)
def _suffix_table(bits, pat, m, T):
    # T[t, j] = matches of pattern letters j..m (1-based) in bits[t:]
    n = bits.shape[0]
    for j in range(m + 2):
        T[n, j] = 1 if j >= m + 1 else 0
    for t in range(n - 1, -1, -1):
        T[t, m + 1] = 1
        for j in range(m, 0, -1):
            T[t, j] = T[t + 1, j] + (T[t + 1, j + 1] if pat[j - 1] == bits[t] else 0)
        T[t, 0] = 0


@njit(cache=True)
def _run_chain(bits, pats, mlens, coefs, total_sweeps, burn_sweeps, seed,
               check_every, n_checkpoints):
    """Metropolis chain; returns counts, acceptance, site sums, checkpoints.

    Proposals scan left to right; at each stop an adjacent transposition is
    proposed with probability SWAP_SHARE (consuming two positions), else a
    bit flip.  Suffix tables are rebuilt once per sweep; positions already
    scanned only affect the prefix rows, so the tables stay valid.
    """
    np.random.seed(seed)
    n = bits.shape[0]
    k = pats.shape[0]
    mmax = 0
    for i in range(k):
        if mlens[i] > mmax:
            mmax = mlens[i]
    T = np.zeros((k, n + 1, mmax + 2), dtype=np.int64)
    L = np.zeros((k, mmax + 1), dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(k):
        counts[i] = _count_dp(bits, pats[i], mlens[i])

    accepted = 0
    proposals = 0
    site_sums = np.zeros(n, dtype=np.int64)
    measure_sweeps = 0
    cp_every = max(1, (total_sweeps - burn_sweeps) // n_checkpoints)
    cp_dens = np.zeros((n_checkpoints, k))
    cp_sites = np.zeros((n_checkpoints, n))
    cp_sweep = np.zeros(n_checkpoints, dtype=np.int64)
    cp_idx = 0
    run_dens = np.zeros(k)
    drift_ok = True
    sweeps_since_check = 0

    for sweep in range(total_sweeps):
        # rebuild suffix tables for the current configuration
        for i in range(k):
            _suffix_table(bits, pats[i], mlens[i], T[i])
            for j in range(mmax + 1):
                L[i, j] = 1 if j == 0 else 0
        t = 0
        while t < n:
            u = np.random.random()
            do_swap = (u < SWAP_SHARE) and (t + 1 < n)
            if do_swap:
                proposals += 1
                v0 = bits[t]
                v1 = bits[t + 1]
                dE = 0.0
                if v0 != v1:
                    for i in range(k):
                        m = mlens[i]
                        dN = np.int64(0)
                        for j in range(1, m):
                            # pattern letters (j, j+1) across positions (t, t+1)
                            old = 1 if (pats[i, j - 1] == v0 and pats[i, j] == v1) else 0
                            new = 1 if (pats[i, j - 1] == v1 and pats[i, j] == v0) else 0
                            if old != new:
                                dN += (new - old) * L[i, j - 1] * T[i, t + 2, j + 2]
                        dE += coefs[i] * dN
                ok = dE >= 0.0 or np.random.random() < math.exp(dE)
                if ok and v0 != v1:
                    accepted += 1
                    bits[t] = v1
                    bits[t + 1] = v0
                    for i in range(k):
                        m = mlens[i]
                        dN = np.int64(0)
                        for j in range(1, m):
                            old = 1 if (pats[i, j - 1] == v0 and pats[i, j] == v1) else 0
                            new = 1 if (pats[i, j - 1] == v1 and pats[i, j] == v0) else 0
                            if old != new:
                                dN += (new - old) * L[i, j - 1] * T[i, t + 2, j + 2]
                        counts[i] += dN
                elif ok:
                    accepted += 1
                # absorb both positions into the prefix rows
                for tt in range(t, min(t + 2, n)):
                    for i in range(k):
                        m = mlens[i]
                        for j in range(m, 0, -1):
                            if pats[i, j - 1] == bits[tt]:
                                L[i, j] += L[i, j - 1]
                t += 2
            else:
                proposals += 1
                v = bits[t]
                nv = 1 - v
                dE = 0.0
                dNs = np.zeros(k, dtype=np.int64)
                for i in range(k):
                    m = mlens[i]
                    dN = np.int64(0)
                    for j in range(1, m + 1):
                        contrib = L[i, j - 1] * T[i, t + 1, j + 1]
                        if pats[i, j - 1] == nv:
                            dN += contrib
                        elif pats[i, j - 1] == v:
                            dN -= contrib
                    dNs[i] = dN
                    dE += coefs[i] * dN
                if dE >= 0.0 or np.random.random() < math.exp(dE):
                    accepted += 1
                    bits[t] = nv
                    for i in range(k):
                        counts[i] += dNs[i]
                for i in range(k):
                    m = mlens[i]
                    for j in range(m, 0, -1):
                        if pats[i, j - 1] == bits[t]:
                            L[i, j] += L[i, j - 1]
                t += 1

        sweeps_since_check += 1
        if sweeps_since_check >= check_every:
            sweeps_since_check = 0
            for i in range(k):
                if _count_dp(bits, pats[i], mlens[i]) != counts[i]:
                    drift_ok = False

        if sweep >= burn_sweeps:
            measure_sweeps += 1
            for i in range(k):
                run_dens[i] += counts[i]
            for t2 in range(n):
                site_sums[t2] += bits[t2]
            if (measure_sweeps % cp_every == 0) and cp_idx < n_checkpoints:
                for i in range(k):
                    cp_dens[cp_idx, i] = run_dens[i] / measure_sweeps
                for t2 in range(n):
                    cp_sites[cp_idx, t2] = site_sums[t2] / measure_sweeps
                cp_sweep[cp_idx] = sweep + 1
                cp_idx += 1

    return (counts, accepted, proposals, site_sums, measure_sweeps, run_dens,
            cp_dens, cp_sites, cp_sweep, cp_idx, drift_ok)


def _pattern_arrays(patterns):
    k = len(patterns)
    mmax = max(len(p) for p in patterns)
    pats = np.zeros((k, mmax), dtype=np.int8)
    mlens = np.zeros(k, dtype=np.int64)
    for i, p in enumerate(patterns):
        pats[i, : len(p)] = bits_of(p)
        mlens[i] = len(p)
    return pats, mlens


def _coefs(n, patterns, multipliers):
    return np.array(
        [n * a / math.comb(n, len(p)) for p, a in zip(patterns, multipliers)]
    )


def mcmc_sample(spec: GibbsSpec, reference: StepMeasure | None = None,
                init_bits: np.ndarray | None = None):
    """Run the chain; returns (final word, ChainStats).

    The empirical distribution function fhat is the time-averaged site
    occupation; the d_W trace compares it to the reference measure at
    every checkpoint when a reference is given.
    """
    rng = np.random.default_rng(spec.seed)
    if init_bits is None:
        bits = (rng.random(spec.n) < 0.5).astype(np.int8)
    else:
        bits = np.asarray(init_bits, dtype=np.int8).copy()
    pats, mlens = _pattern_arrays(spec.patterns)
    coefs = _coefs(spec.n, spec.patterns, spec.multipliers)
    total = spec.burn_in_sweeps + spec.sweeps
    check_every = max(1, 10_000 // spec.n)
    (counts, accepted, proposals, site_sums, msweeps, run_dens, cp_dens,
     cp_sites, cp_sweep, cp_idx, drift_ok) = _run_chain(
        bits, pats, mlens, coefs, total, spec.burn_in_sweeps,
        int(rng.integers(0, 2**31 - 1)), check_every, spec.checkpoints,
    )
    denoms = np.array([math.comb(spec.n, len(p)) for p in spec.patterns], dtype=float)
    mean_dens = {
        p: float(run_dens[i] / msweeps / denoms[i])
        for i, p in enumerate(spec.patterns)
    }
    fhat = StepMeasure(np.full(spec.n, 1.0 / spec.n),
                       np.clip(site_sums / msweeps, 0.0, 1.0))
    dw_trace = []
    if reference is not None:
        for c in range(cp_idx):
            mu_c = StepMeasure(np.full(spec.n, 1.0 / spec.n),
                               np.clip(cp_sites[c], 0.0, 1.0))
            dw_trace.append((int(cp_sweep[c]), wasserstein(mu_c, reference)))
    stats = ChainStats(
        mean_densities=mean_dens,
        acceptance_rate=accepted / max(proposals, 1),
        fhat=fhat,
        dw_trace=dw_trace,
        drift_ok=bool(drift_ok),
        sweeps=total,
        checkpoint_densities=cp_dens[:cp_idx] / denoms,
    )
    return word_of_bits(bits), stats


class CalibrationError(RuntimeError):
    """Multiplier calibration diverged or stalled; carries the trace."""

    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class CalibrationResult:
    patterns: tuple[str, ...]
    multipliers: tuple[float, ...]
    mean_densities: dict[str, float]
    trace: list[dict]
    converged: bool


def calibrate_multipliers(
    targets: dict[str, float],
    n: int,
    seed: int = 0,
    init: dict[str, float] | None = None,
    tol: float = 2e-2,
    max_rounds: int = 120,
    segment_sweeps: int = 40,
    multiplier_cap: float = 60.0,
) -> CalibrationResult:
    """Robbins-Monro adjustment of multipliers toward target mean densities.

    Each round runs a chain segment from the previous final state, then
    nudges every multiplier along (target - mean) with a decaying gain.
    Divergence (a multiplier hitting the cap) raises CalibrationError with
    the trace; targets on or outside the feasible boundary end up there.
    """
    patterns = tuple(targets)
    tvec = np.array([targets[p] for p in patterns])
    a = np.array([0.0 if init is None else init.get(p, 0.0) for p in patterns])
    rng = np.random.default_rng(seed)
    bits = (rng.random(n) < 0.5).astype(np.int8)
    pats, mlens = _pattern_arrays(patterns)
    denoms = np.array([math.comb(n, len(p)) for p in patterns], float)
    trace = []
    # gain scaled by the observed density response; starts optimistic
    gain0 = 4.0
    for rnd in range(max_rounds):
        coefs = _coefs(n, patterns, tuple(a))
        res = _run_chain(bits, pats, mlens, coefs, segment_sweeps + 10, 10,
                         int(rng.integers(0, 2**31 - 1)),
                         max(1, 10_000 // n), 1)
        counts, msweeps, run_dens = res[0], res[4], res[5]
        mean = run_dens / msweeps / denoms
        err = tvec - mean
        trace.append({"round": rnd, "multipliers": a.copy(), "means": mean.copy()})
        if np.all(np.abs(err) < 0.5 * tol):
            # confirmation segment at fixed multipliers
            res = _run_chain(bits, pats, mlens, coefs, 3 * segment_sweeps + 10, 10,
                             int(rng.integers(0, 2**31 - 1)),
                             max(1, 10_000 // n), 1)
            mean = res[5] / res[4] / denoms
            if np.all(np.abs(tvec - mean) < tol):
                return CalibrationResult(
                    patterns=patterns,
                    multipliers=tuple(a),
                    mean_densities={p: float(m) for p, m in zip(patterns, mean)},
                    trace=trace,
                    converged=True,
                )
        gain = gain0 / (1.0 + rnd / 15.0)
        a = a + gain * err / np.maximum(tvec * (1 - tvec), 1e-2)
        if np.any(np.abs(a) > multiplier_cap):
            raise CalibrationError(
                "multiplier cap exceeded; targets look infeasible or on the "
                "feasibility boundary", trace)
    raise CalibrationError("calibration did not converge within budget", trace)


def exact_state_distribution(n: int, patterns, multipliers) -> np.ndarray:
    """Normalized stationary weights over all 2^n states (n <= 20)."""
    if n > 20:
        raise ValueError("exact enumeration limited to n <= 20")
    from .patterns import count_pattern

    weights = np.empty(2**n)
    for s in range(2**n):
        word = format(s, f"0{n}b")
        e = 0.0
        for p, aa in zip(patterns, multipliers):
            e += n * aa * count_pattern(p, word) / math.comb(n, len(p))
        weights[s] = math.exp(e)
    return weights / weights.sum()


@njit(cache=True)
def _run_chain_histogram(bits, pats, mlens, coefs, total_proposals, seed):
    """Small-n chain recording state visits after every proposal."""
    np.random.seed(seed)
    n = bits.shape[0]
    k = pats.shape[0]
    mmax = 0
    for i in range(k):
        if mlens[i] > mmax:
            mmax = mlens[i]
    T = np.zeros((k, n + 1, mmax + 2), dtype=np.int64)
    L = np.zeros((k, mmax + 1), dtype=np.int64)
    hist = np.zeros(2**n, dtype=np.int64)
    state = 0
    for t in range(n):
        state = (state << 1) | bits[t]

    done = 0
    while done < total_proposals:
        for i in range(k):
            _suffix_table(bits, pats[i], mlens[i], T[i])
            for j in range(mmax + 1):
                L[i, j] = 1 if j == 0 else 0
        t = 0
        while t < n and done < total_proposals:
            u = np.random.random()
            do_swap = (u < SWAP_SHARE) and (t + 1 < n)
            if do_swap:
                done += 1
                v0, v1 = bits[t], bits[t + 1]
                dE = 0.0
                if v0 != v1:
                    for i in range(k):
                        m = mlens[i]
                        dN = np.int64(0)
                        for j in range(1, m):
                            old = 1 if (pats[i, j - 1] == v0 and pats[i, j] == v1) else 0
                            new = 1 if (pats[i, j - 1] == v1 and pats[i, j] == v0) else 0
                            if old != new:
                                dN += (new - old) * L[i, j - 1] * T[i, t + 2, j + 2]
                        dE += coefs[i] * dN
                if (dE >= 0.0 or np.random.random() < math.exp(dE)) and v0 != v1:
                    bits[t], bits[t + 1] = v1, v0
                    state ^= (1 << (n - 1 - t)) | (1 << (n - 2 - t))
                hist[state] += 1
                for tt in range(t, min(t + 2, n)):
                    for i in range(k):
                        m = mlens[i]
                        for j in range(m, 0, -1):
                            if pats[i, j - 1] == bits[tt]:
                                L[i, j] += L[i, j - 1]
                t += 2
            else:
                done += 1
                v = bits[t]
                nv = 1 - v
                dE = 0.0
                for i in range(k):
                    m = mlens[i]
                    dN = np.int64(0)
                    for j in range(1, m + 1):
                        contrib = L[i, j - 1] * T[i, t + 1, j + 1]
                        if pats[i, j - 1] == nv:
                            dN += contrib
                        elif pats[i, j - 1] == v:
                            dN -= contrib
                    dE += coefs[i] * dN
                if dE >= 0.0 or np.random.random() < math.exp(dE):
                    bits[t] = nv
                    state ^= 1 << (n - 1 - t)
                hist[state] += 1
                for i in range(k):
                    m = mlens[i]
                    for j in range(m, 0, -1):
                        if pats[i, j - 1] == bits[t]:
                            L[i, j] += L[i, j - 1]
                t += 1
    return hist


def total_variation_check(n: int, patterns, multipliers, proposals: int = 10**7,
                          seed: int = 0) -> float:
    """TV distance between chain visits and the exact Gibbs law (n <= 10)."""
    if n > 10:
        raise ValueError("detailed-balance check limited to n <= 10")
    rng = np.random.default_rng(seed)
    bits = (rng.random(n) < 0.5).astype(np.int8)
    pats, mlens = _pattern_arrays(patterns)
    coefs = _coefs(n, patterns, multipliers)
    hist = _run_chain_histogram(bits, pats, mlens, coefs, proposals,
                                int(rng.integers(0, 2**31 - 1)))
    emp = hist / hist.sum()
    exact = exact_state_distribution(n, patterns, multipliers)
    return float(0.5 * np.abs(emp - exact).sum())
