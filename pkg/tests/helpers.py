"""Independent reference computations shared by the tests."""
from itertools import combinations

import numpy as np

from streamfec.convcode import SystematicConvCode, encode_stream
from streamfec.field import FieldSpec, field_new


def generator_by_encoding(code: SystematicConvCode, j: int) -> np.ndarray:
    """Rows are encodings of unit source vectors over steps 0..j."""
    k, n = code.k, code.n
    rows = []
    for step in range(j + 1):
        for l in range(k):
            s = np.zeros((j + 1, k), dtype=np.int64)
            s[step, l] = 1
            rows.append(encode_stream(code, s).reshape(-1))
    return np.array(rows, dtype=np.int64).reshape((j + 1) * k, (j + 1) * n)


def codewords_with_nonzero_first(code: SystematicConvCode, j: int):
    """All truncated codewords over 0..j whose first source symbol is nonzero."""
    f = code.field
    q, K = f.q, code.k * (j + 1)
    G = generator_by_encoding(code, j)
    idx = np.arange(q ** K, dtype=np.int64)
    s = (idx[:, None] // (q ** np.arange(K - 1, -1, -1, dtype=np.int64))[None, :]) % q
    s = s[(s[:, : code.k] != 0).any(axis=1)]
    return f.matmul(s, G)


def symbol_supports(code: SystematicConvCode, j: int) -> set:
    x = codewords_with_nonzero_first(code, j)
    sym = (x != 0).reshape(len(x), j + 1, code.n).any(axis=2)
    return {tuple(np.nonzero(r)[0]) for r in sym}


def ref_column_distance(code, j, level="symbol"):
    x = codewords_with_nonzero_first(code, j)
    if level == "symbol":
        return int((x != 0).reshape(len(x), j + 1, code.n).any(axis=2).sum(axis=1).min())
    return int((x != 0).sum(axis=1).min())


def ref_column_span(code, j):
    x = codewords_with_nonzero_first(code, j)
    sym = (x != 0).reshape(len(x), j + 1, code.n).any(axis=2)
    last = j - np.argmax(sym[:, ::-1], axis=1)
    return int((last + 1).min())


def fails_by_support(supports: set, pattern) -> bool:
    """s[0] is lost under a symbol pattern iff some codeword hides inside it."""
    p = set(pattern)
    return any(set(s) <= p for s in supports)


def random_small_code(rng, q: int, max_inputs: int = 14) -> SystematicConvCode:
    f = field_new(FieldSpec.prime(q))
    while True:
        k = int(rng.integers(1, 3))
        n = k + int(rng.integers(1, 3))
        m = int(rng.integers(1, 4))
        if k * (m + 1) <= max_inputs and q ** (k * (m + 1)) <= 5_000_000:
            break
    H = f.random(rng, (m + 1, k, n - k))
    return SystematicConvCode(k, n, m, H, f)


def example_121_code() -> SystematicConvCode:
    """Rate-1/2 code over GF(2) with p[t] = s[t] + s[t-1]."""
    f = field_new(FieldSpec.prime(2))
    H = np.ones((2, 1, 1), dtype=np.int64)
    return SystematicConvCode(1, 2, 1, H, f)


def all_symbol_patterns(window: int, must_contain=0):
    rest = [x for x in range(window) if x != must_contain]
    for r in range(len(rest) + 1):
        for c in combinations(rest, r):
            yield tuple(sorted((must_contain,) + c))
