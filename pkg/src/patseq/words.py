"""Binary words: validation and elementary transforms.

Words are plain Python strings over the alphabet {'0', '1'}.  Patterns
(short words to be counted) and hosts (long words to be searched) share
the representation.
"""

from __future__ import annotations

import numpy as np

MAX_PATTERN_LEN = 8


def check_word(word: str, name: str = "word") -> str:
    """Validate that ``word`` is a string of '0'/'1' characters."""
    if not isinstance(word, str):
        raise TypeError(f"{name} must be a str of '0'/'1', got {type(word).__name__}")
    if any(c not in "01" for c in word):
        raise ValueError(f"{name} must contain only '0' and '1': {word!r}")
    return word


def check_pattern(pattern: str) -> str:
    """Validate a pattern word: nonempty and within the length cap."""
    check_word(pattern, "pattern")
    if len(pattern) == 0:
        raise ValueError("pattern must be nonempty")
    if len(pattern) > MAX_PATTERN_LEN:
        raise ValueError(
            f"pattern length {len(pattern)} exceeds cap {MAX_PATTERN_LEN}"
        )
    return pattern


def complement(word: str) -> str:
    """Flip every bit."""
    return word.translate(str.maketrans("01", "10"))


def reverse(word: str) -> str:
    return word[::-1]


def bits_of(word: str) -> np.ndarray:
    """Word as an int8 array of 0/1."""
    return np.frombuffer(word.encode("ascii"), dtype=np.uint8).astype(np.int8) - ord("0")


def word_of_bits(bits) -> str:
    return "".join("1" if int(b) else "0" for b in bits)


def all_patterns(length: int) -> list[str]:
    """All 2^length binary words of the given length, lexicographic."""
    return [format(i, f"0{length}b") for i in range(2**length)] if length else [""]


def random_word(n: int, rng: np.random.Generator, p_one: float = 0.5) -> str:
    return word_of_bits(rng.random(n) < p_one)
