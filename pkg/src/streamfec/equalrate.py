"""Layered streaming codes for equal source and channel packet rates.

Each source symbol s[i] = (u[i], v[i]) is split into an urgent part u and a
part v.  A constituent code over v produces parity p_v[i]; the channel
symbol carries q[i] = p_v[i] + u[i - T_eff], which repeats the urgent part
after the longest burst the code handles.  The robust variant adds a second
parity p_u[i] computed from u alone, which handles isolated erasures.

Constituent codes come from one of two backends: random codes over a large
prime field ("random-smds") or diagonally interleaved block MDS codes
("block-mds", GF(2^8) by default).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .convcode import SystematicConvCode
from .decoding import DecoderState, LayeredCode, PatternEngine, Roles, decode_oracle, decode_staged, encode
from .field import FieldSpec, as_field, field_new, random_code_field
from .matrix import rs_generator

log = logging.getLogger(__name__)

BACKENDS = ("random-smds", "block-mds")

__all__ = [
    "build_genms", "build_midas", "build_smds_baseline", "flatten", "encode", "decode_staged",
    "decode_oracle", "certify_channel", "ChannelCertificate", "effective_delay", "DecoderState",
    "smds_capability",
]


class CodeConstructionError(ValueError):
    pass


class CertificationFailure(RuntimeError):
    pass


def effective_delay(T: int, W: int | None) -> int:
    return T if W is None else min(T, W - 1)


def _backend_field(backend: str, field):
    if field is not None:
        return as_field(field)
    if backend == "block-mds":
        return field_new(FieldSpec.gf2(8))
    return random_code_field()


def _layered_H(k_u: int, k_v: int, k_s: int, Te: int, Hv: np.ndarray | None,
               Hu: np.ndarray | None) -> np.ndarray:
    """Parity blocks of the flattened code with source (u, v) and parity (q, p_u)."""
    k = k_u + k_v
    H = np.zeros((Te + 1, k, k_u + k_s), dtype=np.int64)
    H[Te, np.arange(k_u), np.arange(k_u)] = 1
    if Hv is not None and k_v:
        H[:, k_u:, :k_u] = Hv
    if Hu is not None and k_s:
        H[:, :k_u, k_u:] = Hu
    return H


def _block_v_layer(k_u: int, k_v: int, inter: int, B: int, Te: int, field) -> np.ndarray:
    """Diagonal interleaving of a (Te, Te-B) MDS code over the v-layer."""
    Hv = np.zeros((Te + 1, k_v, k_u), dtype=np.int64)
    if Te - B == 0:
        return Hv
    P = rs_generator(Te, Te - B, field).data[:, Te - B:]
    for j in range(inter):
        for a in range(Te - B):
            for l in range(B):
                d = Te - B + l - a
                Hv[d, j + inter * a, j + inter * l] = P[a, l]
    return Hv


def _block_u_layer(k_u: int, k_s: int, B: int, N: int, Te: int, field) -> np.ndarray:
    """Diagonal interleaving of a (Te+1, Te-N+1) MDS code over the u-layer."""
    Hu = np.zeros((Te + 1, k_u, k_s), dtype=np.int64)
    kk = Te - N + 1
    P = rs_generator(Te + 1, kk, field).data[:, kk:]
    for j in range(B):
        for a in range(kk):
            for l in range(N):
                d = kk + l - a
                Hu[d, j + B * a, j + B * l] = P[a, l]
    return Hu


def _assemble(family, params, k_u, k_v, k_s, Te, T, Hv, Hu, field, design) -> LayeredCode:
    H = _layered_H(k_u, k_v, k_s, Te, Hv, Hu)
    k = k_u + k_v
    n = k + k_u + k_s
    conv = SystematicConvCode(k, n, Te, H, field)
    roles = Roles(np.arange(k_u), np.arange(k_u, k), np.arange(k_u), np.arange(k_u, k_u + k_s), Te)
    return LayeredCode(family, params, conv, (np.arange(n),), T, roles, design)


def build_genms(B: int, T: int, W: int | None = None, field=None, seed: int = 0,
                backend: str = "random-smds", reduce: bool = False, certify: bool = False) -> LayeredCode:
    """Burst-only layered code: rate T_eff/(T_eff+B), one burst of B per window.

    With ``reduce`` the split (B, T_eff-B) is divided by its gcd, which
    keeps the rate and shrinks the sub-symbol count.
    """
    Te = effective_delay(T, W)
    if not 1 <= B <= Te:
        raise CodeConstructionError(f"need 1 <= B <= T_eff (B={B}, T_eff={Te})")
    if backend not in BACKENDS:
        raise CodeConstructionError(f"unknown backend {backend!r}")
    g = math.gcd(B, Te) if (reduce and backend == "random-smds") else 1
    k_u, k_v = B // g, (Te - B) // g
    f = _backend_field(backend, field)
    design = {"N": 1, "B": B, "W": W if W is not None else Te + 1}
    params = {"B": B, "T": T, "W": W, "backend": backend, "seed": seed, "reduce": reduce}

    def make(sd):
        if backend == "random-smds":
            rng = np.random.default_rng(sd)
            Hv = f.random(rng, (Te + 1, k_v, k_u))
        else:
            Hv = _block_v_layer(k_u, k_v, 1, B, Te, f)
        return _assemble("genms", dict(params, seed=sd), k_u, k_v, 0, Te, T, Hv, None, f, design)

    return _certified(make, seed, backend, certify)


def _midas_sizes(N: int, B: int, Te: int, split: int | None):
    m = Te - N + 1 if split is None else split
    k_u = m * B
    k_v = m * (Te - B)
    num = m * B * N
    if num % (Te - N + 1):
        raise CodeConstructionError(f"split factor {m} leaves a fractional parity count")
    return m, k_u, k_v, num // (Te - N + 1)


def build_midas(N: int, B: int, T: int, W: int | None = None, backend: str = "random-smds",
                field=None, seed: int = 0, split: int | None = None, certify: bool = False) -> LayeredCode:
    """Layered code for N isolated erasures or one burst of B per window.

    Rate T_eff / (T_eff + B + B N / (T_eff - N + 1)).  The source is split
    into ``m = T_eff - N + 1`` sub-blocks so every count is an integer;
    N = 1 reduces to :func:`build_genms`.
    """
    Te = effective_delay(T, W)
    if backend not in BACKENDS:
        raise CodeConstructionError(f"unknown backend {backend!r}")
    if not 1 <= N <= B <= Te:
        raise CodeConstructionError(f"need 1 <= N <= B <= T_eff (N={N}, B={B}, T_eff={Te})")
    if N == 1:
        code = build_genms(B, T, W, field, seed, backend, certify=certify)
        code.params = dict(code.params, N=1, delegated="genms")
        return code
    if backend == "block-mds" and split not in (None, Te - N + 1):
        raise CodeConstructionError("block-mds backend needs the split factor T_eff-N+1")
    m, k_u, k_v, k_s = _midas_sizes(N, B, Te, split)
    f = _backend_field(backend, field)
    design = {"N": N, "B": B, "W": W if W is not None else Te + 1}
    params = {"N": N, "B": B, "T": T, "W": W, "backend": backend, "seed": seed, "split": m}

    def make(sd):
        if backend == "random-smds":
            rng = np.random.default_rng(sd)
            Hv = f.random(rng, (Te + 1, k_v, k_u))
            Hu = f.random(rng, (Te + 1, k_u, k_s))
        else:
            if Te + 1 > f.q:
                raise CodeConstructionError("field too small for the block MDS constituents")
            Hv = _block_v_layer(k_u, k_v, m, B, Te, f)
            Hu = _block_u_layer(k_u, k_s, B, N, Te, f)
        return _assemble("midas", dict(params, seed=sd), k_u, k_v, k_s, Te, T, Hv, Hu, f, design)

    return _certified(make, seed, backend, certify)


def smds_capability(rate: Fraction, T: int, M: int = 1) -> int:
    """Largest N = B handled by a strongly-MDS code of the given rate."""
    rate = Fraction(rate)
    return math.floor(M * (1 - rate) * (T + 1))


def build_smds_baseline(rate, T: int, M: int = 1, field=None, seed: int = 0,
                        certify: bool = False) -> LayeredCode:
    """Random (n, k, T) code used as a strongly-MDS reference.

    ``rate`` is taken as an exact fraction k/n.  For ``M > 1`` each step
    is sent as M packets of equal size in transmission order.
    """
    rate = Fraction(rate)
    if not 0 < rate < 1:
        raise CodeConstructionError("rate must lie strictly between 0 and 1")
    a, b = rate.numerator, rate.denominator
    n_slot = b // math.gcd(b, a * M)
    n = M * n_slot
    k = a * n // b
    f = random_code_field() if field is None else as_field(field)
    cap = smds_capability(rate, T, M)
    design = {"N": cap, "B": cap, "W": M * (T + 1)}
    params = {"rate": str(rate), "T": T, "M": M, "seed": seed}
    packets = tuple(np.arange(j * n_slot, (j + 1) * n_slot) for j in range(M))

    def make(sd):
        rng = np.random.default_rng(sd)
        conv = SystematicConvCode(k, n, T, f.random(rng, (T + 1, k, n - k)), f)
        return LayeredCode("smds", dict(params, seed=sd), conv, packets, T, None, design)

    return _certified(make, seed, "random-smds", certify)


def flatten(code: LayeredCode) -> SystematicConvCode:
    return code.conv


# --- certification ----------------------------------------------------------

@dataclass
class ChannelCertificate:
    passed: bool
    tested: int
    family_size: int
    sampled: bool
    decoder: str
    counterexample: tuple | None = None
    lost_step: int | None = None
    offset: int = 0

    def to_json(self):
        return {"passed": self.passed, "tested": self.tested, "family_size": self.family_size,
                "sampled": self.sampled, "decoder": self.decoder,
                "counterexample": list(self.counterexample) if self.counterexample else None,
                "lost_step": self.lost_step}


class CapExceeded(RuntimeError):
    pass


def window_slots(code: LayeredCode, W: int | None, T: int) -> int:
    M = code.M
    if W is None:
        return M * (T + 1)
    return M * (min(T, W // M - 1) + 1) if M > 1 else min(T + 1, W)


def channel_patterns(window: int, N: int, B: int, maximal: bool = False):
    """Bursts of length 1..B at offsets 0..window-1 and all <=N subsets of the window.

    With ``maximal`` only patterns not contained in another one are kept
    (bursts of length B and N-subsets spanning more than B positions).
    """
    pats = set()
    lengths = [B] if maximal else range(1, B + 1)
    for L in lengths:
        if L <= 0:
            continue
        for o in range(window):
            pats.add(tuple(range(o, o + L)))
    sizes = [N] if maximal else range(1, N + 1)
    for s in sizes:
        if s <= 0 or s > window:
            continue
        for c in combinations(range(window), s):
            if maximal and c[-1] - c[0] < B:
                continue
            pats.add(c)
    return sorted(pats)


def count_channel_patterns(window: int, N: int, B: int) -> int:
    return len(channel_patterns(window, N, B)) if window * max(B, 1) + math.comb(window, max(N, 0)) < 5 * 10**6 else -1


def certify_channel(code: LayeredCode, N: int | None = None, B: int | None = None, W: int | None = None,
                    T: int | None = None, decoder: str = "staged", maximal: bool = False,
                    cap: int = 10**6, sample: bool = True, seed: int = 0,
                    engine: PatternEngine | None = None) -> ChannelCertificate:
    """Check every single-window admissible pattern of C(N, B, W).

    Patterns are placed after a clean lead-in; every erased source step
    must be recovered by its deadline.  Positions are packets (equal to
    symbols when M = 1).  Families above ``cap`` are sampled when
    ``sample`` is set and raise :class:`CapExceeded` otherwise.
    """
    d = code.design
    N = d.get("N", 1) if N is None else N
    B = d.get("B", 0) if B is None else B
    W = d.get("W") if W is None else W
    T = code.delay if T is None else T
    M = code.M
    window = window_slots(code, W, T)
    pats = channel_patterns(window, N, B, maximal)
    size = len(pats)
    sampled = False
    if size > cap:
        if not sample:
            raise CapExceeded(f"{size} patterns exceed the cap of {cap}")
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(size, size=cap, replace=False))
        pats = [pats[i] for i in idx]
        sampled = True
    lead = code.memory + 1
    steps = lead + (window + B) // M + 2 + T + code.memory + 2
    eng = engine or PatternEngine(code, decoder, T)
    tested = 0
    for pat in pats:
        tested += 1
        erased = np.zeros(steps * M, dtype=bool)
        erased[np.asarray(pat) + lead * M] = True
        status = eng.lost_steps(erased)
        bad = np.nonzero(status == 1)[0]
        if bad.size or (status == 2).any():
            lost = int(bad[0]) - lead if bad.size else None
            return ChannelCertificate(False, tested, size, sampled, decoder, tuple(pat), lost, lead)
    return ChannelCertificate(True, tested, size, sampled, decoder, None, None, lead)


def _certified(make, seed: int, backend: str, certify: bool, attempts: int = 5) -> LayeredCode:
    if not certify:
        return make(seed)
    for a in range(attempts):
        code = make(seed + a)
        cert = certify_channel(code, maximal=True)
        if cert.passed:
            code.params["certified"] = True
            return code
        log.info("seed %d failed certification on %s", seed + a, cert.counterexample)
        if backend == "block-mds":
            break
    raise CertificationFailure(f"no certified code after {a + 1} attempt(s)")
