"""Exact subsequence-pattern counting on binary words.

Counts N_w(X) of a pattern w occurring as a (not necessarily consecutive)
subword of a host X, the densities N_w(X)/C(n,m), the classical algebraic
identities among counts of patterns up to length 4, polynomial counts on
block sequences 1^{a_1}0^{a_2}..., and numeric algebraic-independence
ranks over block families.

All counts are exact Python integers; densities are converted to float
only at the final division.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .words import all_patterns, check_pattern, check_word

log = logging.getLogger(__name__)

# Finite-difference step (relative) and SVD rank threshold used by
# independence_rank; fixed here for reproducibility.
FD_STEP_REL = 1e-5
SVD_RTOL = 1e-8

# A maximal independent set of length <= 4 patterns (modulo relations and
# the sequence length n), and one choice of 6 length-5 patterns extending
# it to the conjectured count A(5) = 13.  The length-5 choice is not
# canonical; this one was found by a greedy rank search over generic block
# points, preferring 1-leading patterns.
INDEPENDENT_SET_LEN4 = ("1", "10", "100", "110", "1000", "1100", "1110")
INDEPENDENT_SET_LEN5 = INDEPENDENT_SET_LEN4 + (
    "11110",
    "11100",
    "11010",
    "11000",
    "10100",
    "10000",
)


def count_pattern(pattern: str, host: str) -> int:
    """Number of ways ``pattern`` occurs as a subsequence of ``host``.

    Standard O(n*m) dynamic program; exact arbitrary-precision result.
    """
    check_pattern(pattern)
    check_word(host, "host")
    m = len(pattern)
    # dp[j] = number of ways to spell pattern[:j] in the prefix scanned so far
    dp = [0] * (m + 1)
    dp[0] = 1
    for ch in host:
        for j in range(m, 0, -1):
            if pattern[j - 1] == ch:
                dp[j] += dp[j - 1]
    return dp[m]


def density(pattern: str, host: str) -> float:
    """Pattern density N_w(X) / C(n, m); exact ratio, floated at the end."""
    check_pattern(pattern)
    check_word(host, "host")
    if len(pattern) > len(host):
        raise ValueError(
            f"pattern length {len(pattern)} exceeds host length {len(host)}"
        )
    n, m = len(host), len(pattern)
    count = count_pattern(pattern, host)
    total = math.comb(n, m)
    return count / total


def count_all(host: str, max_len: int) -> dict[str, int]:
    """Counts for every pattern of length 1..max_len (max_len capped at 8)."""
    check_word(host, "host")
    if not 1 <= max_len <= 8:
        raise ValueError(f"max_len must be in [1, 8], got {max_len}")
    out: dict[str, int] = {}
    for m in range(1, max_len + 1):
        for pat in all_patterns(m):
            out[pat] = count_pattern(pat, host)
    return out


@dataclass
class RelationCheck:
    """One verified identity: name, both sides (exact), and the verdict."""

    relation: str
    lhs: int
    rhs: int

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "pass": self.passed,
        }


def check_relations(host: str) -> list[RelationCheck]:
    """Evaluate the classical identities among pattern counts up to length 4.

    Every relation is a theorem, so each check must pass on every host of
    length >= 4; the report exists to exercise them numerically.
    """
    check_word(host, "host")
    n = len(host)
    if n < 4:
        raise ValueError("host length must be >= 4 to evaluate all relations")
    N = count_all(host, 4)
    C = math.comb
    checks: list[RelationCheck] = []

    def rel(name: str, lhs: int, rhs: int) -> None:
        checks.append(RelationCheck(name, lhs, rhs))

    rel("N0+N1=n", N["0"] + N["1"], n)

    # length 2
    rel("N00=C(N0,2)", N["00"], C(N["0"], 2))
    rel("N01+N10=N0*N1", N["01"] + N["10"], N["0"] * N["1"])
    rel("N11=C(N1,2)", N["11"], C(N["1"], 2))

    # length 3, linear
    rel("N000=C(N0,3)", N["000"], C(N["0"], 3))
    rel(
        "N001+N010+N100=C(N0,2)*N1",
        N["001"] + N["010"] + N["100"],
        C(N["0"], 2) * N["1"],
    )
    rel(
        "N110+N101+N011=N0*C(N1,2)",
        N["110"] + N["101"] + N["011"],
        N["0"] * C(N["1"], 2),
    )
    rel("N111=C(N1,3)", N["111"], C(N["1"], 3))

    # length 3, products with a single letter (and the 0<->1 swapped pair)
    rel("N0*N10=N010+2N100+N10", N["0"] * N["10"], N["010"] + 2 * N["100"] + N["10"])
    rel("N0*N01=N010+2N001+N01", N["0"] * N["01"], N["010"] + 2 * N["001"] + N["01"])
    rel("N1*N01=N101+2N011+N01", N["1"] * N["01"], N["101"] + 2 * N["011"] + N["01"])
    rel("N1*N10=N101+2N110+N10", N["1"] * N["10"], N["101"] + 2 * N["110"] + N["10"])

    # length 4, linear: fixed number of ones
    for k in range(5):
        pats = [p for p in all_patterns(4) if p.count("1") == k]
        rel(
            f"sum(N_w: |w|=4, ones={k})=C(N0,{4 - k})*C(N1,{k})",
            sum(N[p] for p in pats),
            C(N["0"], 4 - k) * C(N["1"], k),
        )

    # length 4, products N0 * N_xyz
    rel(
        "N0*N001=3N0001+N0010+2N001",
        N["0"] * N["001"],
        3 * N["0001"] + N["0010"] + 2 * N["001"],
    )
    rel(
        "N0*N010=2N0010+2N0100+2N010",
        N["0"] * N["010"],
        2 * N["0010"] + 2 * N["0100"] + 2 * N["010"],
    )
    rel(
        "N0*N100=3N1000+N0100+2N100",
        N["0"] * N["100"],
        3 * N["1000"] + N["0100"] + 2 * N["100"],
    )
    rel(
        "N0*N011=2N0011+N0101+N0110+N011",
        N["0"] * N["011"],
        2 * N["0011"] + N["0101"] + N["0110"] + N["011"],
    )
    rel(
        "N0*N101=N0101+2N1001+N1010+N101",
        N["0"] * N["101"],
        N["0101"] + 2 * N["1001"] + N["1010"] + N["101"],
    )
    rel(
        "N0*N110=N0110+N1010+2N1100+N110",
        N["0"] * N["110"],
        N["0110"] + N["1010"] + 2 * N["1100"] + N["110"],
    )

    # the quadratic relation and the surprising length-4 reduction
    rel(
        "N10^2=2N1010+4N1100+2N110+2N100+N10",
        N["10"] ** 2,
        2 * N["1010"] + 4 * N["1100"] + 2 * N["110"] + 2 * N["100"] + N["10"],
    )
    rel(
        "N1001=N1*N100+N110-C(N10,2)",
        N["1001"],
        N["1"] * N["100"] + N["110"] - C(N["10"], 2),
    )
    return checks


def _choose_general(a, c: int):
    """C(a, c) extended to real a via falling factorials; exact for int a."""
    if c == 0:
        return 1
    if isinstance(a, (int, np.integer)):
        return math.comb(int(a), c)
    num = 1.0
    for t in range(c):
        num *= a - t
    return num / math.factorial(c)


def block_counts_polynomial(pattern: str, blocks) -> float:
    """N_pattern of X = 1^{a_1}0^{a_2}1^{a_3}... as a polynomial in the a_i.

    Block lengths may be arbitrary nonnegative reals; for integer blocks
    the value equals count_pattern on the expanded word exactly.
    """
    check_pattern(pattern)
    blocks = list(blocks)
    if any(
        (isinstance(a, float) and a < 0) or (isinstance(a, (int, np.integer)) and a < 0)
        or (isinstance(a, np.floating) and a < 0)
        for a in blocks
    ):
        raise ValueError("block lengths must be nonnegative")
    m = len(pattern)
    dp = [0] * (m + 1)
    dp[0] = 1
    for i, a in enumerate(blocks):
        sym = "1" if i % 2 == 0 else "0"
        new = dp.copy()
        for j0 in range(m):
            w = dp[j0]
            if w == 0:
                continue
            c = 1
            while j0 + c <= m and pattern[j0 + c - 1] == sym:
                new[j0 + c] += w * _choose_general(a, c)
                c += 1
        dp = new
    return dp[m]


def expand_blocks(blocks) -> str:
    """Expand an integer block vector to the explicit binary word."""
    out = []
    for i, a in enumerate(blocks):
        ia = int(a)
        if ia != a:
            raise ValueError("expand_blocks requires integer block lengths")
        out.append(("1" if i % 2 == 0 else "0") * ia)
    return "".join(out)


@dataclass
class IndependenceResult:
    """Numeric rank of the block-family Jacobian of a pattern set."""

    patterns: list[str]
    blocks: list[float]
    rank: int
    singular_values: np.ndarray
    jacobian: np.ndarray = field(repr=False)
    degenerate_warning: bool = False


def independence_rank(
    patterns,
    blocks,
    fd_step_rel: float = FD_STEP_REL,
    svd_rtol: float = SVD_RTOL,
    row_normalize: bool = True,
) -> IndependenceResult:
    """Rank of d(N_tau)/d(a_i) at the given block point.

    Central finite differences on block_counts_polynomial followed by an
    SVD rank decision at threshold svd_rtol * largest singular value.
    Rows are scaled to unit norm by default: the counting polynomials span
    degrees 1..8, and without row scaling the smallest true singular value
    of a mixed-degree independent set sits near the threshold.
    A degenerate point (repeated or nonpositive blocks) sets a warning
    flag since the rank may then be underestimated.
    """
    patterns = [check_pattern(p) for p in patterns]
    blocks = [float(a) for a in blocks]
    degenerate = any(a <= 0 for a in blocks) or len(set(np.round(blocks, 9))) < len(
        blocks
    )
    jac = np.zeros((len(patterns), len(blocks)))
    for i, a in enumerate(blocks):
        h = fd_step_rel * max(1.0, abs(a))
        up = blocks.copy()
        dn = blocks.copy()
        up[i] = a + h
        dn[i] = a - h
        for p_idx, pat in enumerate(patterns):
            jac[p_idx, i] = (
                block_counts_polynomial(pat, up) - block_counts_polynomial(pat, dn)
            ) / (2 * h)
    work = jac
    if row_normalize:
        norms = np.linalg.norm(jac, axis=1, keepdims=True)
        work = jac / np.where(norms > 0, norms, 1.0)
    svals = np.linalg.svd(work, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(svals > svd_rtol * svals[0]))
    log.info(
        "independence_rank: %d patterns, blocks=%s, rank=%d",
        len(patterns),
        np.array2string(np.asarray(blocks), precision=6),
        rank,
    )
    return IndependenceResult(
        patterns=patterns,
        blocks=blocks,
        rank=rank,
        singular_values=svals,
        jacobian=jac,
        degenerate_warning=degenerate,
    )


def conjectured_independent_count(k: int) -> int:
    """Conjectured number of algebraically independent patterns of length <= k.

    Empirical ranks are reported against this value; it is not asserted
    as a theorem beyond length 4.
    """
    return sum(math.comb(j - 1, (j - 1) // 2) for j in range(1, k + 1))
