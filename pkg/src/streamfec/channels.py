"""Erasure traces: sliding-window admissibility, periodic patterns and Markov samplers."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import islice
from math import comb

import numpy as np

from .equalrate import CapExceeded, channel_patterns

__all__ = ["ErasureTrace", "GEParams", "FritchmanParams", "validate_trace", "enumerate_window_patterns",
           "periodic_trace", "sample_ge", "sample_fritchman", "iter_ge", "iter_fritchman",
           "burst_histogram", "ge_stationary_loss", "fritchman_stationary_loss", "derive_seeds",
           "write_trace", "read_trace", "TraceFormatError"]

BLOCK = 1 << 20


class TraceFormatError(ValueError):
    pass


@dataclass
class ErasureTrace:
    """A finite erasure sequence; ``erased[t]`` is True when position t is lost.

    For macro codes positions are channel packets (slots) and ``M`` gives
    the slots per source step.
    """

    erased: np.ndarray
    seed: int | None = None
    M: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.erased = np.asarray(self.erased, dtype=bool)

    @classmethod
    def from_positions(cls, positions, length: int, **kw) -> "ErasureTrace":
        e = np.zeros(length, dtype=bool)
        pos = np.asarray(list(positions), dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= length):
            raise ValueError("erasure positions must lie in [0, length)")
        e[pos] = True
        return cls(e, **kw)

    @property
    def length(self) -> int:
        return int(self.erased.size)

    @property
    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.erased)

    @property
    def loss_rate(self) -> float:
        return float(self.erased.mean()) if self.length else 0.0

    def __len__(self):
        return self.length


@dataclass(frozen=True)
class GEParams:
    alpha: float
    beta: float
    eps: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "eps"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class FritchmanParams:
    n_bad: int
    alpha: float
    beta: float
    eps: float = 0.0

    def __post_init__(self):
        if self.n_bad < 1:
            raise ValueError("need at least one bad state")
        GEParams(self.alpha, self.beta, self.eps)


def validate_trace(trace, N: int, B: int, W: int):
    """Check membership in C(N, B, W).

    Every length-W window (the whole trace if shorter) must contain at most
    N erasures or a single burst of length at most B.  Returns
    ``(ok, first_bad_window_start)``.
    """
    if W <= B:
        raise ValueError("need W > B")
    e = trace.erased if isinstance(trace, ErasureTrace) else np.asarray(trace, dtype=bool)
    L = e.size
    if L == 0:
        return True, None
    w = min(W, L)
    starts = np.arange(L - w + 1)
    cs = np.concatenate([[0], np.cumsum(e, dtype=np.int64)])
    count = cs[starts + w] - cs[starts]
    idx = np.flatnonzero(e)
    if idx.size == 0:
        return True, None
    # first erased position >= s and last erased position <= s + w - 1;
    # windows without erasures pass on the count test anyway
    first = idx[np.minimum(np.searchsorted(idx, starts, side="left"), idx.size - 1)]
    last = idx[np.maximum(np.searchsorted(idx, starts + w - 1, side="right") - 1, 0)]
    span = last - first + 1
    burst_ok = (span == count) & (count <= B)
    ok = (count <= N) | burst_ok
    if ok.all():
        return True, None
    return False, int(starts[np.argmin(ok)])


def enumerate_window_patterns(N: int, B: int, T_eff: int, cap: int = 10**6):
    """Bursts of length 1..B and all <=N subsets over the window [0, T_eff]."""
    window = T_eff + 1
    bound = B * window + sum(comb(window, s) for s in range(1, N + 1))
    if bound > cap:
        raise CapExceeded(f"up to {bound} patterns exceed the cap of {cap}")
    return channel_patterns(window, N, B)


def periodic_trace(period: int, burst_len: int, total_len: int, offset: int = 0) -> ErasureTrace:
    """Erase the first ``burst_len`` positions of every period."""
    if not 0 <= burst_len <= period:
        raise ValueError("need 0 <= burst_len <= period")
    t = (np.arange(total_len) - offset) % period
    return ErasureTrace(t < burst_len, meta={"period": period, "burst": burst_len, "offset": offset})


def derive_seeds(master: int, count: int) -> list[int]:
    """Disjoint child seeds for parallel streams, fixed by the master seed."""
    ss = np.random.SeedSequence(master)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(count)]


class _RunChain:
    """Alternating good and bad runs; bursts are sums of ``n_bad`` geometric stays."""

    def __init__(self, alpha, beta, n_bad, rng):
        self.alpha, self.beta, self.n_bad, self.rng = alpha, beta, n_bad, rng
        bad_time = n_bad / beta if beta > 0 else np.inf
        good_time = 1 / alpha if alpha > 0 else np.inf
        if np.isinf(good_time):
            p_bad_state = 0.0
        elif np.isinf(bad_time):
            p_bad_state = 1.0
        else:
            p_bad_state = bad_time / (good_time + bad_time)
        u = rng.random()
        if u < p_bad_state:
            # stationary start inside the bad chain: uniform over its states
            stage = int(rng.integers(0, n_bad))
            self.state, self.left = True, self._bad_len(n_bad - stage)
        else:
            self.state, self.left = False, self._good_len()

    def _good_len(self):
        if self.alpha == 0:
            return np.iinfo(np.int64).max
        return int(self.rng.geometric(self.alpha))

    def _bad_len(self, stages=None):
        stages = self.n_bad if stages is None else stages
        if self.beta == 0:
            return np.iinfo(np.int64).max
        if self.beta == 1:
            return stages
        return int(self.rng.negative_binomial(stages, self.beta)) + stages

    def fill(self, out: np.ndarray):
        pos, n = 0, out.size
        while pos < n:
            take = min(self.left, n - pos)
            out[pos:pos + take] = self.state
            pos += take
            self.left -= take
            if self.left == 0:
                self.state = not self.state
                self.left = self._bad_len() if self.state else self._good_len()


def _iter_markov(alpha, beta, n_bad, eps, length, seed, chunk):
    ss = np.random.SeedSequence(seed)
    run_ss, noise_ss = ss.spawn(2)
    chain = _RunChain(alpha, beta, n_bad, np.random.Generator(np.random.PCG64(run_ss)))
    noise = np.random.Generator(np.random.PCG64(noise_ss))

    def blocks():
        done = 0
        while done < length:
            n = min(BLOCK, length - done)
            b = np.empty(n, dtype=bool)
            chain.fill(b)
            if eps > 0:
                b |= noise.random(n) < eps
            done += n
            yield b

    buf = np.zeros(0, dtype=bool)
    for b in blocks():
        buf = np.concatenate([buf, b]) if buf.size else b
        while buf.size >= chunk:
            yield buf[:chunk]
            buf = buf[chunk:]
    if buf.size:
        yield buf


def iter_ge(params: GEParams, length: int, seed: int, chunk: int = BLOCK):
    """Stream a Gilbert-Elliott trace in chunks; concatenation equals :func:`sample_ge`."""
    return _iter_markov(params.alpha, params.beta, 1, params.eps, length, seed, chunk)


def iter_fritchman(params: FritchmanParams, length: int, seed: int, chunk: int = BLOCK):
    return _iter_markov(params.alpha, params.beta, params.n_bad, params.eps, length, seed, chunk)


def _collect(it, length):
    out = np.empty(length, dtype=bool)
    pos = 0
    for c in it:
        out[pos:pos + c.size] = c
        pos += c.size
    return out


def sample_ge(params: GEParams, length: int, seed: int = 0) -> ErasureTrace:
    """Two-state chain: good->bad w.p. alpha, bad->good w.p. beta.

    Bad positions are always lost, good ones independently w.p. eps.  The
    chain starts in its stationary distribution.
    """
    e = _collect(iter_ge(params, length, seed), length)
    return ErasureTrace(e, seed=seed, meta={"channel": "ge", "alpha": params.alpha,
                                            "beta": params.beta, "eps": params.eps})


def sample_fritchman(params: FritchmanParams, length: int, seed: int = 0) -> ErasureTrace:
    """Good state plus bad states E_1..E_N visited in order.

    Good -> E_1 w.p. alpha; each bad state is left w.p. beta, towards the
    next bad state or, from E_N, back to good.  Bursts are therefore at
    least N long.
    """
    e = _collect(iter_fritchman(params, length, seed), length)
    return ErasureTrace(e, seed=seed, meta={"channel": "fritchman", "n_bad": params.n_bad,
                                            "alpha": params.alpha, "beta": params.beta,
                                            "eps": params.eps})


def ge_stationary_loss(alpha: float, beta: float, eps: float) -> float:
    if alpha + beta <= 0:
        raise ValueError("need alpha + beta > 0")
    return beta / (alpha + beta) * eps + alpha / (alpha + beta)


def fritchman_stationary_loss(params: FritchmanParams) -> float:
    good, bad = 1 / params.alpha, params.n_bad / params.beta
    pb = bad / (good + bad)
    return pb + (1 - pb) * params.eps


def _runs(e: np.ndarray):
    """Start positions and lengths of maximal erased runs."""
    if e.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    d = np.diff(np.concatenate([[0], e.view(np.int8), [0]]))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return starts, ends - starts


def burst_histogram(trace) -> dict[int, int]:
    e = trace.erased if isinstance(trace, ErasureTrace) else np.asarray(trace, dtype=bool)
    _, lens = _runs(e)
    return dict(sorted(Counter(lens.tolist()).items()))


_HEADER = re.compile(r"^FECTRACE v1 length=(\d+)$")


def write_trace(trace: ErasureTrace, path) -> None:
    """ASCII run lengths alternating received, erased, ... starting with received."""
    e = trace.erased
    starts, lens = _runs(e)
    counts = []
    pos = 0
    for s, l in zip(starts.tolist(), lens.tolist()):
        counts += [s - pos, l]
        pos = s + l
    if pos < e.size:
        counts.append(e.size - pos)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"FECTRACE v1 length={e.size}\n")
        it = iter(counts)
        while line := list(islice(it, 16)):
            fh.write(" ".join(map(str, line)) + "\n")


def read_trace(path) -> ErasureTrace:
    with open(path, encoding="ascii") as fh:
        m = _HEADER.match(fh.readline().rstrip("\n"))
        if not m:
            raise TraceFormatError("missing 'FECTRACE v1 length=L' header")
        L = int(m.group(1))
        try:
            counts = [int(x) for x in fh.read().split()]
        except ValueError as exc:
            raise TraceFormatError("run lengths must be integers") from exc
    if any(c < 0 for c in counts) or sum(counts) != L:
        raise TraceFormatError("run lengths do not add up to the declared length")
    e = np.zeros(L, dtype=bool)
    pos = 0
    for i, c in enumerate(counts):
        if i % 2:
            e[pos:pos + c] = True
        pos += c
    return ErasureTrace(e)
