import math
from itertools import combinations

import numpy as np
import pytest

from patseq.patterns import (INDEPENDENT_SET_LEN4, INDEPENDENT_SET_LEN5,
                             block_counts_polynomial, check_relations,
                             conjectured_independent_count, count_all,
                             count_pattern, density, expand_blocks,
                             independence_rank)
from patseq.words import all_patterns, complement, random_word, reverse


def brute_count(pattern: str, host: str) -> int:
    """Independent oracle: enumerate all index subsets."""
    m = len(pattern)
    return sum(
        1
        for idx in combinations(range(len(host)), m)
        if all(host[i] == pattern[j] for j, i in enumerate(idx))
    )


def test_count_worked_example():
    assert count_pattern("10", "0100101") == 4


def test_count_single_symbol():
    assert count_pattern("1", "0100101") == 3


def test_count_derived_example():
    # all C(5,2)=10 index pairs enumerated by the oracle
    assert brute_count("01", "01011") == 5
    assert count_pattern("01", "01011") == 5


def test_count_empty_pattern_rejected():
    with pytest.raises(ValueError):
        count_pattern("", "0101")


def test_count_vs_oracle_exhaustive_small():
    # the acceptance suite extends this to n <= 12, m <= 4
    for n in range(1, 8):
        for s in range(2**n):
            host = format(s, f"0{n}b")
            for m in range(1, min(3, n) + 1):
                for pat in all_patterns(m):
                    assert count_pattern(pat, host) == brute_count(pat, host)


def test_count_symmetries():
    rng = np.random.default_rng(5)
    for _ in range(200):
        host = random_word(int(rng.integers(4, 40)), rng)
        pat = random_word(int(rng.integers(1, 5)), rng)
        n_wx = count_pattern(pat, host)
        assert n_wx == count_pattern(complement(pat), complement(host))
        assert n_wx == count_pattern(reverse(pat), reverse(host))
        assert 0 <= n_wx <= math.comb(len(host), len(pat))


def test_density_examples():
    assert density("10", "0100101") == pytest.approx(4 / 21)
    assert density("11", "111") == 1.0
    assert density("1", "0000") == 0.0
    with pytest.raises(ValueError):
        density("101", "10")


def test_count_all_examples():
    assert count_all("0110", 1) == {"0": 2, "1": 2}
    res = count_all("0100101", 2)
    assert {k: res[k] for k in ("00", "01", "10", "11")} == {
        "00": 6, "01": 8, "10": 4, "11": 3}
    assert res["01"] + res["10"] == res["0"] * res["1"]
    assert count_all("01101", 2)["01"] == 4
    with pytest.raises(ValueError):
        count_all("0110", 0)
    with pytest.raises(ValueError):
        count_all("0110", 9)


def test_relations_worked_examples():
    rep = {r.relation: r for r in check_relations("0100101")}
    assert all(r.passed for r in rep.values())
    assert rep["N01+N10=N0*N1"].lhs == 12

    rep = check_relations("1111")
    assert all(r.passed for r in rep)

    counts = {p: brute_count(p, "10100110") for p in
              ["1001", "1", "100", "110", "10"]}
    assert counts["1001"] == (counts["1"] * counts["100"] + counts["110"]
                              - math.comb(counts["10"], 2))


def test_relations_random_hosts():
    rng = np.random.default_rng(17)
    for _ in range(150):
        host = random_word(int(rng.integers(4, 65)), rng,
                           p_one=float(rng.uniform(0.15, 0.85)))
        for rel in check_relations(host):
            assert rel.passed, f"{rel.relation} on {host}"


def test_relations_host_too_short():
    with pytest.raises(ValueError):
        check_relations("101")


def test_relation_json_schema():
    rel = check_relations("0100101")[0]
    js = rel.to_json()
    assert set(js) == {"relation", "lhs", "rhs", "pass"}
    assert isinstance(js["lhs"], str) and isinstance(js["pass"], bool)


def test_block_polynomial_examples():
    assert block_counts_polynomial("10", (3, 2)) == 6
    assert block_counts_polynomial("1010", (13, 13, 13, 13)) == 28561
    assert block_counts_polynomial("110", (2, 1, 2, 1)) == count_pattern(
        "110", "110110")
    with pytest.raises(ValueError):
        block_counts_polynomial("10", (2, -1))


def test_block_polynomial_vs_expansion():
    rng = np.random.default_rng(11)
    for _ in range(200):
        nblocks = int(rng.integers(2, 9))
        blocks = [int(b) for b in rng.integers(0, 6, nblocks)]
        word = expand_blocks(blocks)
        pat = random_word(int(rng.integers(1, 5)), rng)
        if not word:
            continue
        assert block_counts_polynomial(pat, blocks) == brute_count(pat, word)


def test_block_polynomial_real_blocks_match_integer_values():
    val_int = block_counts_polynomial("1010", (3, 2, 4, 1))
    val_real = block_counts_polynomial("1010", (3.0, 2.0, 4.0, 1.0))
    assert val_real == pytest.approx(val_int, abs=1e-9)


def test_independence_single_pattern():
    res = independence_rank(["00"], [1.5, 2.5, 0.5, 1.0])
    assert res.rank == 1


def test_independence_rank_deficiency():
    # N_01 + N_10 = N_0 N_1 forces rank 3 on the four functions
    res = independence_rank(["0", "1", "01", "10"],
                            [1.1, 2.3, 0.7, 1.9, 3.1, 0.5, 2.2, 1.3])
    assert res.rank == 3


def test_independence_seven_pattern_set():
    res = independence_rank(INDEPENDENT_SET_LEN4,
                            [1.1, 2.3, 0.7, 1.9, 3.1, 0.5, 2.2, 1.3])
    assert res.rank == 7
    assert not res.degenerate_warning


def test_independence_len5_set_reported_rank():
    blocks = np.random.default_rng(20250810).uniform(0.5, 3.0, 14)
    res = independence_rank(INDEPENDENT_SET_LEN5, blocks)
    assert res.rank == 13 == conjectured_independent_count(5)


def test_independence_degenerate_warning():
    res = independence_rank(["10"], [1.0, 1.0, 2.0, 2.0])
    assert res.degenerate_warning


def test_conjectured_counts():
    assert conjectured_independent_count(4) == 7
    assert conjectured_independent_count(5) == 13
