"""Systematic convolutional codes over a finite field.

A code with parameters ``(n, k, m)`` maps source vectors s[i] of length k to
channel vectors x[i] = (s[i], p[i]) of length n, where

    p[i] = sum_{t=0..m} s[i-t] H[t]

and each H[t] is a ``k x (n-k)`` matrix.  Inputs before time zero are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .field import Field, as_field, random_code_field
from .matrix import Matrix, targets_determined


@dataclass
class SystematicConvCode:
    k: int
    n: int
    m: int
    H: np.ndarray  # shape (m+1, k, n-k)
    field: Field

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.int64)
        if not 0 < self.k <= self.n:
            raise ValueError("need 0 < k <= n")
        if self.m < 0:
            raise ValueError("memory must be non-negative")
        if self.H.shape != (self.m + 1, self.k, self.n - self.k):
            raise ValueError(f"H has shape {self.H.shape}, expected {(self.m + 1, self.k, self.n - self.k)}")

    @property
    def rate(self):
        from fractions import Fraction

        return Fraction(self.k, self.n)

    @property
    def parity(self) -> int:
        return self.n - self.k

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "m": self.m, "field": self.field.spec.to_json(),
                "H": self.H.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SystematicConvCode":
        return cls(obj["k"], obj["n"], obj["m"], np.array(obj["H"], dtype=np.int64).reshape(
            obj["m"] + 1, obj["k"], obj["n"] - obj["k"]), as_field(obj["field"]))


def encode_step(code: SystematicConvCode, history: Sequence) -> np.ndarray:
    """Channel vector for the newest source in ``history`` (oldest first).

    Missing older inputs are taken as zero.
    """
    hist = [np.asarray(h, dtype=np.int64) for h in history][-(code.m + 1):]
    if not hist:
        raise ValueError("empty history")
    s_now = hist[-1]
    f = code.field
    par = np.zeros(code.n - code.k, dtype=np.int64)
    for t, s in enumerate(reversed(hist)):
        par = f.add(par, f.matmul(s[None, :], code.H[t])[0])
    return np.concatenate([s_now, par])


def encode_stream(code: SystematicConvCode, sources) -> np.ndarray:
    """Encode a whole ``(L, k)`` source array into an ``(L, n)`` array."""
    s = np.asarray(sources, dtype=np.int64)
    if s.ndim != 2 or s.shape[1] != code.k:
        raise ValueError("sources must have shape (L, k)")
    f = code.field
    L = s.shape[0]
    par = np.zeros((L, code.n - code.k), dtype=np.int64)
    for t in range(min(code.m, L - 1) + 1):
        contrib = f.matmul(s[: L - t], code.H[t])
        par[t:] = f.add(par[t:], contrib)
    return np.concatenate([s, par], axis=1)


def truncated_generator(code: SystematicConvCode, j: int) -> Matrix:
    """Generator of the first ``j+1`` steps, block upper-triangular."""
    k, n = code.k, code.n
    g = np.zeros(((j + 1) * k, (j + 1) * n), dtype=np.int64)
    for a in range(j + 1):
        g[a * k:(a + 1) * k, a * n:a * n + k] = np.eye(k, dtype=np.int64)
        for b in range(a, min(j, a + code.m) + 1):
            g[a * k:(a + 1) * k, b * n + k:(b + 1) * n] = code.H[b - a]
    return Matrix(g, code.field)


def random_systematic(k: int, n: int, m: int, field=None, seed: int = 0,
                      min_field_size: int = 2**20) -> SystematicConvCode:
    """Random systematic code with i.i.d. uniform parity blocks."""
    f = random_code_field() if field is None else as_field(field)
    if f.q < min_field_size:
        raise ValueError(f"field of size {f.q} is below the minimum {min_field_size} for random codes")
    rng = np.random.default_rng(seed)
    H = f.random(rng, (m + 1, k, n - k))
    return SystematicConvCode(k, n, m, H, f)


# --- erasure patterns within a finite window -------------------------------

def _pattern_to_coords(pattern, level: str, n: int) -> np.ndarray:
    pos = np.asarray(sorted(pattern), dtype=np.int64)
    if level == "symbol":
        if pos.size == 0:
            return pos
        return (pos[:, None] * n + np.arange(n)[None, :]).ravel()
    if level == "subsymbol":
        return pos
    raise ValueError(f"unknown level {level!r}")


class WindowDecoder:
    """Recoverability checks for erasure patterns in the first ``delay+1`` steps.

    Nothing is erased before time zero and the decoder sees every unerased
    channel coordinate in ``[0, (delay+1) n)``.
    """

    def __init__(self, code: SystematicConvCode, delay: int):
        self.code = code
        self.delay = delay
        self.G = truncated_generator(code, delay).data
        k, n = code.k, code.n
        steps = np.arange(delay + 1)
        self.src_cols = (steps[:, None] * n + np.arange(k)[None, :]).ravel()
        # source coordinate of row r of G is column src_cols[r]
        self.is_src = np.zeros((delay + 1) * n, dtype=bool)
        self.is_src[self.src_cols] = True

    def recovers(self, erased_coords: np.ndarray, targets) -> bool:
        """``targets`` are source row indices (step*k + l) that must be fixed."""
        code = self.code
        total = (self.delay + 1) * code.n
        erased = np.zeros(total, dtype=bool)
        ec = erased_coords[erased_coords < total]
        erased[ec] = True
        unknown_rows = np.nonzero(erased[self.src_cols])[0]
        targets = np.asarray(sorted(set(int(t) for t in targets)), dtype=np.int64)
        need = np.intersect1d(targets, unknown_rows)
        if need.size == 0:
            return True
        eq_cols = np.nonzero(~erased & ~self.is_src)[0]
        a = self.G[np.ix_(unknown_rows, eq_cols)].T
        a = a[(a != 0).any(axis=1)]
        pos = np.searchsorted(unknown_rows, need)
        return targets_determined(a, pos, code.field)


def _target_rows(code: SystematicConvCode, targets, erased_coords: np.ndarray, delay: int):
    k, n = code.k, code.n
    if isinstance(targets, str):
        if targets != "erased":
            raise ValueError(f"unknown target set {targets!r}")
        rows = []
        for c in erased_coords:
            step, off = divmod(int(c), n)
            if off < k and step <= delay:
                rows.append(step * k + off)
        return rows
    return [t * k + l for t in targets for l in range(k)]


@dataclass
class RecoveryCertificate:
    passed: bool
    tested: int
    family_size: int
    sampled: bool
    delay: int
    level: str
    counterexample: tuple | None = None
    failures: int = 0

    def to_json(self) -> dict:
        return {"passed": self.passed, "tested": self.tested, "family_size": self.family_size,
                "sampled": self.sampled, "delay": self.delay, "level": self.level,
                "counterexample": list(self.counterexample) if self.counterexample is not None else None,
                "failures": self.failures}


class PatternFamily:
    """A family of erasure patterns with a known size, iterable in lexicographic order."""

    def __init__(self, generator_fn, size: int, sampler=None, name: str = ""):
        self._gen = generator_fn
        self.size = size
        self._sampler = sampler
        self.name = name

    def __iter__(self):
        return self._gen()

    def __len__(self):
        return self.size

    def sample(self, rng: np.random.Generator, count: int):
        if self._sampler is None:
            idx = np.sort(rng.choice(self.size, size=count, replace=False))
            want = iter(idx.tolist())
            nxt = next(want, None)
            for i, p in enumerate(self):
                if nxt is None:
                    break
                if i == nxt:
                    yield p
                    nxt = next(want, None)
            return
        for _ in range(count):
            yield self._sampler(rng)


def subset_family(window: int, size: int, must_contain: int | None = None) -> PatternFamily:
    """All ``size``-subsets of ``range(window)`` (optionally containing one position)."""
    if must_contain is None:
        total = math.comb(window, size)

        def gen():
            return combinations(range(window), size)

        def samp(rng):
            return tuple(sorted(rng.choice(window, size=size, replace=False).tolist()))
    else:
        rest = [x for x in range(window) if x != must_contain]
        total = math.comb(len(rest), size - 1) if size >= 1 else 0

        def gen():
            return (tuple(sorted((must_contain,) + c)) for c in combinations(rest, size - 1))

        def samp(rng):
            pick = rng.choice(len(rest), size=size - 1, replace=False)
            return tuple(sorted([must_contain] + [rest[i] for i in pick]))
    return PatternFamily(gen, total, samp, f"subsets({window},{size})")


def burst_family(window: int, max_len: int, starts: Iterable[int] | None = None) -> PatternFamily:
    """Bursts of every length ``1..max_len`` at every start in ``starts``."""
    starts = list(range(window)) if starts is None else list(starts)
    pats = sorted({tuple(range(s, s + L)) for s in starts for L in range(1, max_len + 1)})
    return PatternFamily(lambda: iter(pats), len(pats), None, f"bursts({window},{max_len})")


def l1_family(code: SystematicConvCode, j: int) -> PatternFamily:
    """Sub-symbol erasures of the maximal size ``(n-k)(j+1)`` within the window."""
    w = (j + 1) * code.n
    return subset_family(w, min(w, (code.n - code.k) * (j + 1)))


def l2_family(code: SystematicConvCode, j: int) -> PatternFamily:
    """Sub-symbol bursts of maximal length starting inside the source part of x[0]."""
    L = (code.n - code.k) * (j + 1)
    pats = [tuple(range(c, min(c + L, (j + 1) * code.n))) for c in range(code.k)]
    return PatternFamily(lambda: iter(pats), len(pats), None, "l2")


def l3_family(code: SystematicConvCode, j: int, isolated: int) -> PatternFamily:
    """Burst from position c<k followed by ``isolated`` later erasures, total (n-k)(j+1)."""
    total = (code.n - code.k) * (j + 1)
    w = (j + 1) * code.n
    blen = total - isolated
    pats = []
    for c in range(code.k):
        burst = tuple(range(c, c + blen))
        rest = range(c + blen + 1, w)
        for extra in combinations(rest, isolated):
            pats.append(burst + extra)
    return PatternFamily(lambda: iter(pats), len(pats), None, "l3")


def certify_recovery(code: SystematicConvCode, patterns, delay: int, targets=(0,),
                     level: str = "symbol", cap: int = 10**6, seed: int = 0,
                     stop_at_first: bool = True) -> RecoveryCertificate:
    """Check that every pattern lets the targets be recovered within ``delay`` steps.

    ``patterns`` is an iterable of position tuples (symbol indices or
    sub-symbol coordinates depending on ``level``) or a PatternFamily.
    ``targets`` lists source steps, or is "erased" to require every erased
    source sub-symbol inside the window.  Families larger than ``cap`` are
    sampled uniformly.  The reported counterexample is the lexicographically
    smallest failing pattern among those tested.
    """
    dec = WindowDecoder(code, delay)
    if isinstance(patterns, PatternFamily):
        size = patterns.size
        if size > cap:
            rng = np.random.default_rng(seed)
            todo = sorted(patterns.sample(rng, cap))
            sampled = True
        else:
            todo = patterns
            sampled = False
    else:
        todo = sorted({tuple(sorted(p)) for p in patterns})
        size = len(todo)
        if size > cap:
            rng = np.random.default_rng(seed)
            idx = np.sort(rng.choice(size, size=cap, replace=False))
            todo = [todo[i] for i in idx]
            sampled = True
        else:
            sampled = False
    tested = 0
    failures = 0
    worst = None
    for pat in todo:
        tested += 1
        coords = _pattern_to_coords(pat, level, code.n)
        rows = _target_rows(code, targets, coords, delay)
        if not dec.recovers(coords, rows):
            failures += 1
            pat = tuple(pat)
            if worst is None or pat < worst:
                worst = pat
            # patterns are visited in lexicographic order
            if stop_at_first:
                break
    return RecoveryCertificate(failures == 0, tested, size, sampled, delay, level, worst, failures)


# --- column distance and span ---------------------------------------------

def _undetermined(dec: WindowDecoder, coords: np.ndarray) -> bool:
    return not dec.recovers(coords, range(dec.code.k))


def _enumeration_supports(code: SystematicConvCode, j: int, level: str, chunk: int = 1 << 16):
    """Yield (weight, span) for every input with s[0] != 0 (small fields only)."""
    f = code.field
    q = f.q
    K = code.k * (j + 1)
    if q ** K > 50_000_000:
        raise ValueError("enumeration too large")
    G = truncated_generator(code, j).data
    n = code.n
    total = q ** K
    radix = q ** np.arange(K - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        s = (idx[:, None] // radix[None, :]) % q
        keep = (s[:, : code.k] != 0).any(axis=1)
        s = s[keep]
        if s.size == 0:
            continue
        x = f.matmul(s, G)
        nz = x != 0
        sym = nz.reshape(len(s), j + 1, n).any(axis=2)
        yield s, nz, sym


def column_distance(code: SystematicConvCode, j: int, level: str = "symbol", method: str = "rank") -> int:
    """Minimum weight of a truncated codeword with s[0] != 0.

    ``rank``: the smallest erasure set in ``[0, j]`` that leaves s[0]
    undetermined.  ``enumerate``: brute force over all inputs.
    """
    if method == "enumerate":
        best = None
        for _, nz, sym in _enumeration_supports(code, j, level):
            w = (sym.sum(axis=1) if level == "symbol" else nz.sum(axis=1)).min()
            best = int(w) if best is None else min(best, int(w))
        return best
    dec = WindowDecoder(code, j)
    if level == "symbol":
        for w in range(1, j + 2):
            for pat in combinations(range(1, j + 1), w - 1):
                coords = _pattern_to_coords((0,) + pat, "symbol", code.n)
                if _undetermined(dec, coords):
                    return w
        return j + 1
    total = (j + 1) * code.n
    limit = sum(math.comb(total, w) for w in range(0, min(total, (code.n - code.k) * (j + 1) + 2)))
    if limit > 2_000_000:
        raise ValueError("sub-symbol column distance by rank method is too large for this window")
    for w in range(1, total + 1):
        for pat in combinations(range(total), w):
            if not any(p % code.n < code.k and p < code.n for p in pat):
                continue
            if _undetermined(dec, np.asarray(pat, dtype=np.int64)):
                return w
    return total


def column_span(code: SystematicConvCode, j: int, method: str = "rank") -> int:
    """Shortest symbol span of a truncated codeword with s[0] != 0."""
    if method == "enumerate":
        best = None
        for _, _, sym in _enumeration_supports(code, j, "symbol"):
            any_nz = sym.any(axis=1)
            first = np.argmax(sym, axis=1)
            last = j - np.argmax(sym[:, ::-1], axis=1)
            span = np.where(any_nz, last - first + 1, j + 2)
            v = int(span.min())
            best = v if best is None else min(best, v)
        return best
    dec = WindowDecoder(code, j)
    for L in range(1, j + 2):
        for a in range(0, j + 2 - L):
            coords = _pattern_to_coords(tuple(range(a, a + L)), "symbol", code.n)
            if _undetermined(dec, coords):
                return L
    return j + 1
