"""Streaming codes when each source packet is sent as M channel packets.

A burst of B channel packets is written B = b M + B' with 0 <= B' < M.
Capacity depends on where B' falls relative to b M / (T + b).  The
constructions below reshape a layered code (u, v, q = p + u[i-T]) into M
columns per macro-packet so that the u columns come first and their
repetitions q come last, with v filling the middle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .convcode import SystematicConvCode
from .decoding import LayeredCode, Roles, decode_staged, encode
from .equalrate import CodeConstructionError, _certified, certify_channel
from .field import as_field, random_code_field

__all__ = ["burst_split", "capacity", "adapted_ms_rate", "smds_rate", "build_unequal",
           "build_adapted_ms", "build_robust", "encode_macro", "decode_macro_staged",
           "worst_case_count", "MacroCodeSpec", "macro_spec", "macro_delay", "certify_channel",
           "robust_parity_size"]


def burst_split(M: int, B: int) -> tuple[int, int]:
    if M < 1 or B < 0:
        raise ValueError("need M >= 1 and B >= 0")
    return divmod(B, M)


def capacity(M: int, T: int, B: int) -> Fraction:
    """Largest achievable rate for burst length B (in channel packets) and delay T."""
    if T < 0:
        raise ValueError("T must be non-negative")
    b, Bp = burst_split(M, B)
    if B == 0:
        return Fraction(1)
    if T < b:
        return Fraction(0)
    if T == 0 and b == 0:
        # each macro-packet must be decoded on its own
        return Fraction(M - Bp, M)
    if T == b and 2 * Bp > M:
        return Fraction(M - Bp, M)
    if Bp * (T + b) <= b * M:
        return Fraction(T, T + b)
    return Fraction(M * (T + b + 1) - B, M * (T + b + 1))


def adapted_ms_rate(M: int, T: int, B: int) -> Fraction:
    """Rate of a burst code run on the channel-packet clock with delay M T."""
    if B > M * T:
        return Fraction(0)
    return Fraction(M * T, M * T + B)


def smds_rate(M: int, T: int, B: int) -> Fraction:
    """Rate at which a strongly-MDS code just handles bursts of B channel packets."""
    return max(Fraction(0), 1 - Fraction(B, M * (T + 1)))


@dataclass(frozen=True)
class MacroCodeSpec:
    M: int
    T: int
    B: int
    case: str          # "plateau", "steep", "repetition" or "half-repetition"
    n: int             # sub-symbols per channel packet
    k: int
    k_u: int
    k_v: int
    r: int
    r_prime: int

    @property
    def b(self) -> int:
        return self.B // self.M

    @property
    def B_prime(self) -> int:
        return self.B % self.M

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.M * self.n)


def macro_spec(M: int, T: int, B: int, scale: int = 1) -> MacroCodeSpec:
    """Sub-symbol counts of the capacity-achieving construction."""
    b, Bp = burst_split(M, B)
    if B == 0:
        raise CodeConstructionError("nothing to protect against (B = 0)")
    if T < b:
        raise CodeConstructionError("delay shorter than the burst span; capacity is zero")
    if T == 0:
        raise CodeConstructionError("zero delay is not supported by the reshaped construction")
    if T == b and 2 * Bp > M:
        k = (M - Bp) * scale
        return MacroCodeSpec(M, T, B, "repetition", scale, k, k, 0, 0, 0)
    if T == b:
        # half-column repetition: s[i] fills the first M half-columns and
        # s[i-T] the last M, in the same order
        k = M * scale
        return MacroCodeSpec(M, T, B, "half-repetition", 2 * scale, k, k, 0, 0, 0)
    if Bp * (T + b) <= b * M:
        case, n, k, k_u, k_v = "plateau", T + b, M * T, M * b, M * (T - b)
    else:
        case, n, k = "steep", T + b + 1, M * (T + b + 1) - B
        k_u, k_v = B, M * (T + b + 1) - 2 * B
    n, k, k_u, k_v = n * scale, k * scale, k_u * scale, k_v * scale
    r, rp = divmod(k_u, n)
    return MacroCodeSpec(M, T, B, case, n, k, k_u, k_v, r, rp)


def _reshape_columns(spec: MacroCodeSpec, pu_per_col: int = 0) -> list:
    """Canonical coordinates per column: u first, q mirrored at the end.

    Source coordinates are u then v; parity coordinates are q (aligned with
    u) then the u-layer parity, ``pu_per_col`` entries per column.
    """
    M, n, k_u, k_v, r, rp = spec.M, spec.n, spec.k_u, spec.k_v, spec.r, spec.r_prime
    k = k_u + k_v
    u = lambda a, b_: list(range(a, b_))
    q = lambda a, b_: list(range(k + a, k + b_))
    cols = [None] * M
    for c in range(r):
        cols[c] = u(c * n, (c + 1) * n)
        cols[M - 1 - c] = q(c * n, (c + 1) * n)
    mid = M - 2 * r
    if mid == 0:
        if rp or k_v:
            raise CodeConstructionError("no middle column left for the v-layer")
    elif mid == 1:
        cols[r] = u(r * n, r * n + rp) + list(range(k_u, k_u + k_v)) + q(r * n, r * n + rp)
    else:
        vpos = k_u
        first = n - rp
        cols[r] = u(r * n, r * n + rp) + list(range(vpos, vpos + first))
        vpos += first
        for c in range(r + 1, M - r - 1):
            cols[c] = list(range(vpos, vpos + n))
            vpos += n
        last = n - rp
        cols[M - r - 1] = list(range(vpos, vpos + last)) + q(r * n, r * n + rp)
        vpos += last
        if vpos != k_u + k_v:
            raise CodeConstructionError("v-layer does not fill the middle columns")
    if any(len(c) != n for c in cols):
        raise CodeConstructionError("column lengths differ")
    if pu_per_col:
        base = k + k_u
        cols = [c + list(range(base + j * pu_per_col, base + (j + 1) * pu_per_col)) for j, c in enumerate(cols)]
    return cols


def _repetition_columns(spec: MacroCodeSpec) -> list:
    M, s = spec.M, spec.n
    if spec.case == "half-repetition":
        flat = np.arange(2 * spec.k)
        return [flat[j * s:(j + 1) * s].tolist() for j in range(M)]
    Bp = spec.B_prime
    k = spec.k
    cols = []
    for j in range(1, M + 1):
        if j <= M - Bp:
            cols.append(list(range((j - 1) * s, j * s)))
        elif j <= Bp:
            cols.append([-1] * s)
        else:
            a = (j - Bp - 1) * s
            cols.append(list(range(k + a, k + a + s)))
    return cols


def macro_delay(M: int, T: int, W: int | None) -> int:
    """Effective delay in macro-packets for a window of W channel packets."""
    return T if W is None else min(T, W // M - 1)


def build_unequal(M: int, T: int, B: int, field=None, seed: int = 0, scale: int = 1,
                  certify: bool = False, W: int | None = None) -> LayeredCode:
    """Capacity-achieving macro code for one burst of B channel packets.

    With a window ``W`` shorter than M (T + 1) the code is built for the
    effective delay ``W // M - 1``.
    """
    T = macro_delay(M, T, W)
    spec = macro_spec(M, T, B, scale)
    f = random_code_field() if field is None else as_field(field)
    params = {"M": M, "T": T, "B": B, "case": spec.case, "n": spec.n, "k_u": spec.k_u,
              "k_v": spec.k_v, "scale": scale, "seed": seed}
    design = {"N": 1, "B": B, "W": M * (T + 1)}
    k_u, k_v, k = spec.k_u, spec.k_v, spec.k

    if spec.case in ("repetition", "half-repetition"):
        H = np.zeros((T + 1, k, k), dtype=np.int64)
        H[T] = np.eye(k, dtype=np.int64)
        conv = SystematicConvCode(k, 2 * k, T, H, f)
        roles = Roles(np.arange(k), np.arange(0), np.arange(k), np.arange(0), T)
        cols = _repetition_columns(spec)
        code = LayeredCode("unequal", params, conv, tuple(cols), T, roles, design)
        return code

    cols = _reshape_columns(spec)

    def make(sd):
        rng = np.random.default_rng(sd)
        H = np.zeros((T + 1, k, k_u), dtype=np.int64)
        H[T, np.arange(k_u), np.arange(k_u)] = 1
        H[:, k_u:, :] = f.random(rng, (T + 1, k_v, k_u))
        conv = SystematicConvCode(k, k + k_u, T, H, f)
        roles = Roles(np.arange(k_u), np.arange(k_u, k), np.arange(k_u), np.arange(0), T)
        return LayeredCode("unequal", dict(params, seed=sd), conv, tuple(cols), T, roles, design)

    return _certified(make, seed, "random-smds", certify)


def robust_parity_size(M: int, T: int, n: int, N: int, exact: bool = False):
    val = Fraction(N * n, M * (T + 1) - N)
    return val if exact else math.ceil(val)


def build_robust(M: int, T: int, B: int, N: int, field=None, seed: int = 0,
                 exact: bool = False, certify: bool = False) -> LayeredCode:
    """Macro code that also tolerates N isolated channel-packet erasures.

    Each column gains ``k_s = ceil(N n / (M (T+1) - N))`` parity
    sub-symbols of a random (k_u + M k_s, k_u, T) code over u.  With
    ``exact`` all counts are scaled so the fractional k_s is used as is.
    """
    b, Bp = burst_split(M, B)
    if N == 0:
        return build_unequal(M, T, B, field=field, seed=seed, certify=certify)
    if not T > b:
        raise CodeConstructionError("the robust extension needs T > b")
    if N < 0 or N > (T * M * b) // (T + b):
        raise CodeConstructionError(f"N must lie in 1..floor(T M b / (T + b)) = {(T * M * b) // (T + b)}")
    base = macro_spec(M, T, B)
    ks = robust_parity_size(M, T, base.n, N, exact=True)
    scale = ks.denominator if exact else 1
    spec = macro_spec(M, T, B, scale)
    k_s = int(ks * scale) if exact else math.ceil(ks)
    f = random_code_field() if field is None else as_field(field)
    cols = _reshape_columns(spec, k_s)
    k_u, k_v, k = spec.k_u, spec.k_v, spec.k
    params = {"M": M, "T": T, "B": B, "N": N, "case": spec.case, "n": spec.n, "k_u": k_u,
              "k_v": k_v, "k_s": k_s, "scale": scale, "seed": seed}
    design = {"N": N, "B": B, "W": M * (T + 1)}

    def make(sd):
        rng = np.random.default_rng(sd)
        npar = k_u + M * k_s
        H = np.zeros((T + 1, k, npar), dtype=np.int64)
        H[T, np.arange(k_u), np.arange(k_u)] = 1
        H[:, k_u:, :k_u] = f.random(rng, (T + 1, k_v, k_u))
        H[:, :k_u, k_u:] = f.random(rng, (T + 1, k_u, M * k_s))
        conv = SystematicConvCode(k, k + npar, T, H, f)
        roles = Roles(np.arange(k_u), np.arange(k_u, k), np.arange(k_u), np.arange(k_u, npar), T)
        return LayeredCode("robust", dict(params, seed=sd), conv, tuple(cols), T, roles, design)

    return _certified(make, seed, "random-smds", certify)


def build_adapted_ms(M: int, T: int, B: int, field=None, seed: int = 0, reduce: bool = True,
                     certify: bool = False) -> LayeredCode:
    """Burst code run on the channel-packet clock with delay M T, grouped in macro-packets.

    The slot-level code has k_u = B/g and k_v = (MT - B)/g with
    g = gcd(B, MT) when ``reduce`` is set.
    """
    Ts = M * T
    if not 1 <= B <= Ts:
        raise CodeConstructionError("need 1 <= B <= M T")
    g = math.gcd(B, Ts) if reduce else 1
    ku, kv = B // g, (Ts - B) // g
    ks = ku + kv
    ns = ks + ku
    f = random_code_field() if field is None else as_field(field)
    params = {"M": M, "T": T, "B": B, "slot_k": ks, "slot_n": ns, "seed": seed, "reduce": reduce}
    design = {"N": 1, "B": B, "W": M * (T + 1)}
    k, npar = M * ks, M * ku

    def make(sd):
        rng = np.random.default_rng(sd)
        Hs = np.zeros((Ts + 1, ks, ku), dtype=np.int64)
        Hs[Ts, np.arange(ku), np.arange(ku)] = 1
        Hs[:, ku:, :] = f.random(rng, (Ts + 1, kv, ku))
        H = np.zeros((T + 1, k, npar), dtype=np.int64)
        for d in range(T + 1):
            for j in range(M):
                for jp in range(M):
                    ds = d * M + j - jp
                    if 0 <= ds <= Ts:
                        H[d, jp * ks:(jp + 1) * ks, j * ku:(j + 1) * ku] = Hs[ds]
        conv = SystematicConvCode(k, k + npar, T, H, f)
        u = np.concatenate([j * ks + np.arange(ku) for j in range(M)])
        v = np.concatenate([j * ks + np.arange(ku, ks) for j in range(M)])
        roles = Roles(u, v, np.arange(npar), np.arange(0), T)
        cols = [list(range(j * ks, (j + 1) * ks)) + list(range(k + j * ku, k + (j + 1) * ku)) for j in range(M)]
        return LayeredCode("adapted-ms", dict(params, seed=sd), conv, tuple(cols), T, roles, design)

    return _certified(make, seed, "random-smds", certify)


def encode_macro(code: LayeredCode, sources) -> list:
    """Per macro-packet lists of M channel packets (arrays of sub-symbols)."""
    return encode(code, sources)


decode_macro_staged = decode_staged


def worst_case_count(spec: MacroCodeSpec, j: int) -> int:
    """Erased or interfered (v, p) sub-symbols in macro-packets i..i+T.

    The burst of length B starts at column ``j`` (1-based) of
    macro-packet i.  Entries of p[i+T] whose u partner in macro-packet i is
    erased count as erased, as do all entries of erased columns.
    """
    if spec.case in ("repetition", "half-repetition"):
        raise ValueError("worst-case count is defined for the reshaped cases")
    if not 1 <= j <= spec.M - spec.r:
        raise ValueError("burst start must lie in 1..M-r")
    M, T = spec.M, spec.T
    cols = _reshape_columns(spec)
    k_u, k = spec.k_u, spec.k
    start = j - 1
    erased = set()
    for x in range(spec.B):
        erased.add(divmod(start + x, M))
    count = 0
    u_erased_0 = set()
    for c in range(M):
        if (0, c) in erased:
            u_erased_0.update(x for x in cols[c] if x < k_u)
    for t in range(T + 1):
        for c in range(M):
            gone = (t, c) in erased
            for x in cols[c]:
                if k_u <= x < k:
                    count += gone
                elif x >= k:
                    l = x - k
                    count += gone or (t == T and l in u_erased_0)
    return count
