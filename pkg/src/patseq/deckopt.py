"""Maximizing a pattern density over arrangements of a fixed deck.

A deck is a binary word with a prescribed number of ones; the neighborhood
is adjacent transpositions, whose effect on the subsequence count is an
exact O(m) integer delta from prefix/suffix tables.  Exhaustive search
enumerates compositions; simulated annealing (geometric cooling, restarts,
ascent polish) handles decks beyond enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from .feasibility import extremal_density_1010
from .measures import word_from_measure
from .patterns import count_pattern
from .words import bits_of, check_pattern, check_word, word_of_bits

EXHAUSTIVE_BUDGET = 10**7
ANNEAL_COOLING = 0.999


@dataclass
class DeckProblem:
    n: int
    ones: int
    pattern: str
    mode: str = "anneal"
    initial: str | None = None

    def __post_init__(self):
        check_pattern(self.pattern)
        if not 0 <= self.ones <= self.n:
            raise ValueError("ones count must lie in [0, n]")
        if self.mode not in ("exhaustive", "anneal", "ascent"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.initial is not None:
            check_word(self.initial, "initial")
            if len(self.initial) != self.n or self.initial.count("1") != self.ones:
                raise ValueError("initial arrangement must match n and ones")


@dataclass
class DeckResult:
    word: str
    count: int
    density: float
    method: str
    trace: list[tuple[int, float]] = field(default_factory=list)
    exhaustive_optimal: bool = False


@njit(cache=True)
def _count(bits, pat):
    m = pat.shape[0]
    dp = np.zeros(m + 1, dtype=np.int64)
    dp[0] = 1
    for t in range(bits.shape[0]):
        for j in range(m, 0, -1):
            if pat[j - 1] == bits[t]:
                dp[j] += dp[j - 1]
    return dp[m]


@njit(cache=True)
def _tables(bits, pat, P, T):
    n = bits.shape[0]
    m = pat.shape[0]
    for j in range(m + 1):
        P[0, j] = 1 if j == 0 else 0
    for t in range(n):
        P[t + 1, 0] = 1
        for j in range(1, m + 1):
            P[t + 1, j] = P[t, j] + (P[t, j - 1] if pat[j - 1] == bits[t] else 0)
    for j in range(m + 2):
        T[n, j] = 1 if j >= m + 1 else 0
    for t in range(n - 1, -1, -1):
        T[t, m + 1] = 1
        T[t, 0] = 0
        for j in range(m, 0, -1):
            T[t, j] = T[t + 1, j] + (T[t + 1, j + 1] if pat[j - 1] == bits[t] else 0)


@njit(cache=True)
def _swap_delta(bits, pat, P, T, i):
    """Exact count change from swapping positions (i, i+1)."""
    v0, v1 = bits[i], bits[i + 1]
    if v0 == v1:
        return np.int64(0)
    m = pat.shape[0]
    d = np.int64(0)
    for j in range(1, m):
        old = pat[j - 1] == v0 and pat[j] == v1
        new = pat[j - 1] == v1 and pat[j] == v0
        if old and not new:
            d -= P[i, j - 1] * T[i + 2, j + 2]
        elif new and not old:
            d += P[i, j - 1] * T[i + 2, j + 2]
    return d


@njit(cache=True)
def _ascent(bits, pat):
    """Steepest ascent on adjacent transpositions; returns the count."""
    n = bits.shape[0]
    m = pat.shape[0]
    P = np.zeros((n + 1, m + 1), dtype=np.int64)
    T = np.zeros((n + 1, m + 2), dtype=np.int64)
    cur = _count(bits, pat)
    while True:
        _tables(bits, pat, P, T)
        best_d = np.int64(0)
        best_i = -1
        for i in range(n - 1):
            d = _swap_delta(bits, pat, P, T, i)
            if d > best_d:
                best_d = d
                best_i = i
        if best_i < 0:
            return cur
        bits[best_i], bits[best_i + 1] = bits[best_i + 1], bits[best_i]
        cur += best_d


@njit(cache=True)
def _anneal(bits, pat, steps, t0, cooling, seed, trace_every, trace_steps,
            trace_vals):
    np.random.seed(seed)
    n = bits.shape[0]
    m = pat.shape[0]
    P = np.zeros((n + 1, m + 1), dtype=np.int64)
    T = np.zeros((n + 1, m + 2), dtype=np.int64)
    _tables(bits, pat, P, T)
    cur = _count(bits, pat)
    best = cur
    best_bits = bits.copy()
    temp = t0
    ti = 0
    for k in range(steps):
        i = np.random.randint(0, n - 1)
        d = _swap_delta(bits, pat, P, T, i)
        if d > 0 or (temp > 1e-300 and np.random.random() < math.exp(d / temp)):
            if d != 0:
                bits[i], bits[i + 1] = bits[i + 1], bits[i]
                cur += d
                _tables(bits, pat, P, T)
                if cur > best:
                    best = cur
                    best_bits[:] = bits
        temp *= cooling
        if trace_every > 0 and (k + 1) % trace_every == 0 and ti < trace_steps.shape[0]:
            trace_steps[ti] = k + 1
            trace_vals[ti] = best
            ti += 1
    bits[:] = best_bits
    return best


def _initial_temperature(bits, pat, rng, target_accept=0.8, samples=200):
    n = bits.shape[0]
    m = pat.shape[0]
    P = np.zeros((n + 1, m + 1), dtype=np.int64)
    T = np.zeros((n + 1, m + 2), dtype=np.int64)
    _tables(bits, pat, P, T)
    deltas = []
    for _ in range(samples):
        i = int(rng.integers(0, n - 1))
        d = _swap_delta(bits, pat, P, T, i)
        if d < 0:
            deltas.append(-d)
    if not deltas:
        return 1.0
    return float(np.mean(deltas) / math.log(1.0 / target_accept))


def _random_arrangement(n, ones, rng):
    bits = np.zeros(n, dtype=np.int8)
    bits[rng.choice(n, size=ones, replace=False)] = 1
    return bits


def evaluate_arrangement(word: str, pattern: str) -> DeckResult:
    """Exact count and density of a given arrangement."""
    count = count_pattern(pattern, word)
    dens = count / math.comb(len(word), len(pattern))
    return DeckResult(word=word, count=count, density=dens, method="evaluate")


def optimize_deck(prob: DeckProblem, seed: int = 0, restarts: int = 20,
                  steps: int = 10**6) -> DeckResult:
    """Best arrangement found for the deck problem.

    Exhaustive mode is exact (budget-checked); ascent improves the initial
    arrangement to a local optimum; anneal runs seeded restarts with
    geometric cooling and an ascent polish, and additionally ascends from
    the initial arrangement so the result never falls below it.
    """
    n, ones, pattern = prob.n, prob.ones, prob.pattern
    pat = bits_of(pattern)
    denom = math.comb(n, len(pattern))
    rng = np.random.default_rng(seed)

    if prob.initial is not None:
        init_bits = bits_of(prob.initial)
    else:
        init_bits = _random_arrangement(n, ones, rng)

    if prob.mode == "exhaustive":
        n_arrangements = math.comb(n, ones)
        if n_arrangements > EXHAUSTIVE_BUDGET:
            raise ValueError(
                f"exhaustive enumeration needs {n_arrangements} > "
                f"{EXHAUSTIVE_BUDGET} evaluations; use mode='anneal'"
            )
        best_bits, best_count = _exhaustive(n, ones, pat)
        word = word_of_bits(best_bits)
        return DeckResult(word=word, count=int(best_count),
                          density=best_count / denom, method="exhaustive",
                          exhaustive_optimal=True)

    if prob.mode == "ascent":
        bits = init_bits.copy()
        count = int(_ascent(bits, pat))
        return DeckResult(word=word_of_bits(bits), count=count,
                          density=count / denom, method="ascent")

    # anneal: seeded restarts, then polish; plus ascent from the initial
    best_bits = init_bits.copy()
    best_count = int(_ascent(best_bits, pat))
    trace: list[tuple[int, float]] = []
    n_trace = 50
    for r in range(restarts):
        bits = init_bits.copy() if r == 0 else _random_arrangement(n, ones, rng)
        t0 = _initial_temperature(bits, pat, rng)
        tsteps = np.zeros(n_trace, dtype=np.int64)
        tvals = np.zeros(n_trace, dtype=np.int64)
        _anneal(bits, pat, steps, t0, ANNEAL_COOLING,
                int(rng.integers(0, 2**31 - 1)), max(1, steps // n_trace),
                tsteps, tvals)
        count = int(_ascent(bits, pat))
        trace.extend(
            (int(r * steps + s), float(v / denom))
            for s, v in zip(tsteps, tvals) if s > 0
        )
        if count > best_count:
            best_count = count
            best_bits = bits.copy()
    return DeckResult(word=word_of_bits(best_bits), count=best_count,
                      density=best_count / denom, method="anneal", trace=trace)


def _exhaustive(n, ones, pat):
    """Vectorized exact scan over all arrangements with the given ones count."""
    if ones in (0, n):
        bits = np.full(n, 1 if ones else 0, dtype=np.int8)
        return bits, int(_count(bits, pat))
    combos = np.fromiter(
        (i for combo in combinations(range(n), ones) for i in combo),
        dtype=np.int32,
    ).reshape(-1, ones)
    words = np.zeros((combos.shape[0], n), dtype=np.int8)
    np.put_along_axis(words, combos, 1, axis=1)
    m = pat.shape[0]
    dp = np.zeros((combos.shape[0], m + 1), dtype=np.int64)
    dp[:, 0] = 1
    for t in range(n):
        col = words[:, t]
        for j in range(m, 0, -1):
            match = col == pat[j - 1]
            dp[:, j] += np.where(match, dp[:, j - 1], 0)
    idx = int(np.argmax(dp[:, m]))
    return words[idx], int(dp[idx, m])


def new_deck_order(n: int = 52) -> str:
    """Alternating half-size blocks: 1^{n/4} 0^{n/4} 1^{n/4} 0^{n/4}."""
    q = n // 4
    return ("1" * q + "0" * q) * 2


@dataclass
class GapRow:
    n: int
    anneal_density: float
    shape_density: float
    limit: float


def asymptotic_gap_report(pattern: str, sizes, seed: int = 0,
                          restarts: int = 4, steps: int = 2 * 10**5) -> list[GapRow]:
    """Finite-deck optima vs the discretized extremal shape, per deck size.

    Restricted to the 1010 pattern at half ones; each row carries the
    annealed optimum, the density of the extremal shape rounded to an
    n-word, and the limiting value the finite optima approach from above.
    """
    if pattern != "1010":
        raise ValueError("gap report is defined for the pattern 1010")
    limit = 3.0 / (4.0 * E_SQ)
    shape = extremal_density_1010(0.5, grid_n=4000)
    rows = []
    for n in sizes:
        if n % 2:
            raise ValueError("deck sizes must be even (half ones)")
        shape_word = word_from_measure(shape, n, mode="round")
        res = optimize_deck(
            DeckProblem(n=n, ones=n // 2, pattern=pattern, initial=shape_word),
            seed=seed, restarts=restarts, steps=steps,
        )
        shape_dens = evaluate_arrangement(shape_word, pattern).density
        rows.append(GapRow(n=n, anneal_density=res.density,
                           shape_density=shape_dens, limit=limit))
    return rows


E_SQ = math.e**2
