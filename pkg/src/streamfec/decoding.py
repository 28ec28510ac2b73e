"""Streaming erasure decoders shared by every code family.

Every construction is flattened to a systematic convolutional code plus a
packet layout: each step emits ``M`` packets, and each packet carries a
fixed list of coordinates of the canonical vector x[i] = (s[i], p[i]).  A
packet is erased as a unit.  Equal-rate codes have one packet per step.

Two decoders are provided for source step ``i`` with deadline ``i + T``:

* oracle: joint elimination over every unresolved source sub-symbol that
  appears in the unerased parity equations of steps ``[i-m, i+T]``;
* staged: alternates eliminations restricted to one layer of the source
  (the v-layer, then the u-layer), using only equations whose unknown
  terms lie in that layer.  Codes without layers use one joint stage.

Decoding only depends on which packets are erased, so the streaming engine
works on erasure patterns and memoises the outcome per local pattern.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .convcode import SystematicConvCode, encode_stream
from .matrix import solve_erasures, targets_determined


class DecodeError(RuntimeError):
    pass


@dataclass
class Roles:
    """Layer structure used by the staged decoder.

    ``u`` and ``v`` index source coordinates; ``q`` indexes parity
    coordinates aligned with ``u`` (q[l] carries u[l] from ``shift`` steps
    earlier); ``pu`` indexes the parity of the u-layer, if any.
    """

    u: np.ndarray
    v: np.ndarray
    q: np.ndarray
    pu: np.ndarray
    shift: int

    def to_json(self):
        return {"u": self.u.tolist(), "v": self.v.tolist(), "q": self.q.tolist(),
                "pu": self.pu.tolist(), "shift": self.shift}

    @classmethod
    def from_json(cls, obj):
        return cls(*(np.asarray(obj[k], dtype=np.int64) for k in ("u", "v", "q", "pu")), int(obj["shift"]))


@dataclass
class LayeredCode:
    """A flattened streaming code with its packet layout and design guarantees.

    ``packets[j]`` lists the canonical coordinates carried by packet ``j``
    of every step; ``-1`` marks a sub-symbol that is always zero.
    ``design`` records the channel the code is built for, in packet units:
    up to ``N`` isolated erasures or one burst of ``B`` in any window of
    ``W`` packets, each source step recovered within ``delay`` steps.
    """

    family: str
    params: dict
    conv: SystematicConvCode
    packets: tuple
    delay: int
    roles: Roles | None = None
    design: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.packets = tuple(np.asarray(p, dtype=np.int64) for p in self.packets)
        lens = {len(p) for p in self.packets}
        if len(lens) != 1:
            raise ValueError("all packets of a step must have the same length")
        used = np.concatenate(self.packets)
        used = used[used >= 0]
        if sorted(used.tolist()) != list(range(self.conv.n)):
            raise ValueError("packet layout must cover every coordinate exactly once")

    @property
    def M(self) -> int:
        return len(self.packets)

    @property
    def packet_len(self) -> int:
        return len(self.packets[0])

    @property
    def rate(self) -> Fraction:
        return Fraction(self.conv.k, self.M * self.packet_len)

    @property
    def k(self) -> int:
        return self.conv.k

    @property
    def memory(self) -> int:
        return self.conv.m

    @property
    def field(self):
        return self.conv.field

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params, "conv": self.conv.to_json(),
                "packets": [p.tolist() for p in self.packets], "delay": self.delay,
                "roles": self.roles.to_json() if self.roles is not None else None,
                "design": self.design, "rate": str(self.rate)}

    @classmethod
    def from_json(cls, obj: dict) -> "LayeredCode":
        roles = Roles.from_json(obj["roles"]) if obj.get("roles") else None
        return cls(obj["family"], obj["params"], SystematicConvCode.from_json(obj["conv"]),
                   tuple(obj["packets"]), int(obj["delay"]), roles, obj.get("design", {}))


def encode(code: LayeredCode, sources) -> list:
    """Encode a ``(L, k)`` source array; returns per-step lists of packet arrays."""
    x = encode_stream(code.conv, sources)
    out = []
    for row in x:
        pk = []
        for p in code.packets:
            vals = np.where(p >= 0, row[np.maximum(p, 0)], 0)
            pk.append(vals)
        out.append(pk)
    return out


class _Layout:
    """Per-code index tables used when building window systems."""

    def __init__(self, code: LayeredCode):
        conv = code.conv
        self.code = code
        self.k, self.n, self.m = conv.k, conv.n, conv.m
        self.M = code.M
        self.src_mask = np.zeros((self.M, self.k), dtype=bool)
        self.par_mask = np.zeros((self.M, self.n - self.k), dtype=bool)
        for j, p in enumerate(code.packets):
            for c in p:
                if c < 0:
                    continue
                if c < self.k:
                    self.src_mask[j, c] = True
                else:
                    self.par_mask[j, c - self.k] = True
        self.src_packets = self.src_mask.any(axis=1)
        self.H = conv.H
        self.field = conv.field

    def erased_src(self, erased: np.ndarray) -> np.ndarray:
        return (erased.astype(np.int64) @ self.src_mask.astype(np.int64)) > 0

    def erased_par(self, erased: np.ndarray) -> np.ndarray:
        return (erased.astype(np.int64) @ self.par_mask.astype(np.int64)) > 0


@dataclass
class WindowSystem:
    a: np.ndarray           # equations x unknowns
    unk_t: np.ndarray       # window step of each unknown
    unk_l: np.ndarray       # source coordinate of each unknown
    eq_t: np.ndarray
    eq_c: np.ndarray        # parity index of each equation
    rhs: np.ndarray | None


def _build_system(lay: _Layout, unknown: np.ndarray, eq_mask: np.ndarray,
                  src_vals=None, par_vals=None) -> WindowSystem:
    """Equations of the parity coordinates in ``eq_mask`` over ``unknown`` sources.

    ``unknown`` is an (L, k) mask, ``eq_mask`` an (L, n-k) mask, both
    indexed by window step.  With values, the right-hand side subtracts the
    contribution of every known source in the window.
    """
    m = lay.m
    ut, ul = np.nonzero(unknown)
    et, ec = np.nonzero(eq_mask)
    d = et[:, None] - ut[None, :]
    valid = (d >= 0) & (d <= m)
    dd = np.clip(d, 0, m)
    a = lay.H[dd, ul[None, :], ec[:, None]]
    a = np.where(valid, a, 0)
    rhs = None
    if src_vals is not None:
        f = lay.field
        s0 = np.where(unknown, 0, src_vals)
        conv = lay.code.conv
        L = unknown.shape[0]
        par = np.zeros((L, conv.n - conv.k), dtype=np.int64)
        for t in range(min(m, L - 1) + 1):
            par[t:] = f.add(par[t:], f.matmul(s0[: L - t], conv.H[t]))
        rhs = f.sub(par_vals[et, ec], par[et, ec])
    return WindowSystem(a, ut, ul, et, ec, rhs)


@dataclass
class WindowResult:
    recovered: bool
    values: np.ndarray | None = None     # s[target] when recovered with values
    known: np.ndarray | None = None      # (L, k) knowledge after decoding
    known_vals: np.ndarray | None = None


class WindowProblem:
    """A local decoding problem around one target step.

    Window steps ``0..L-1`` correspond to absolute steps ``i-2m .. i+T``;
    the target sits at window step ``R0 = 2m``.  Steps before the target
    are either resolved (all sources known) or lost.
    """

    def __init__(self, lay: _Layout, erased: np.ndarray, lost_before: np.ndarray, deadline: int,
                 src_vals=None, par_vals=None):
        self.lay = lay
        self.erased = erased
        self.R0 = 2 * lay.m
        self.L = self.R0 + deadline + 1
        self.lost_before = lost_before
        self.src_vals = src_vals
        self.par_vals = par_vals
        unknown = lay.erased_src(erased)
        resolved = np.zeros(self.L, dtype=bool)
        resolved[: self.R0] = ~lost_before
        unknown[resolved] = False
        self.unknown0 = unknown
        recv_par = ~lay.erased_par(erased)
        recv_par[: self.R0 - lay.m] = False
        self.recv_par = recv_par

    def oracle(self) -> WindowResult:
        unknown = self.unknown0
        if not unknown[self.R0].any():
            vals = None if self.src_vals is None else self.src_vals.copy()
            return self._finish(~unknown, vals)
        sysm = _build_system(self.lay, unknown, self.recv_par, self.src_vals, self.par_vals)
        tgt = np.nonzero(sysm.unk_t == self.R0)[0]
        if self.src_vals is None:
            a = sysm.a
            rows = (a != 0).any(axis=1)
            a = a[rows]
            cols = (a != 0).any(axis=0)
            if not cols[tgt].all():
                return WindowResult(False)
            keep = np.nonzero(cols)[0]
            pos = np.searchsorted(keep, tgt)
            ok = targets_determined(a[:, keep], pos, self.lay.field)
            return WindowResult(bool(ok))
        rep = solve_erasures(sysm.a, sysm.rhs, self.lay.field)
        if not rep.consistent:
            raise DecodeError("inconsistent received symbols")
        known = ~unknown
        vals = np.where(unknown, 0, self.src_vals)
        det = rep.determined
        known[sysm.unk_t[det], sysm.unk_l[det]] = True
        vals[sysm.unk_t[det], sysm.unk_l[det]] = rep.values[det]
        return self._finish(known, vals)

    def staged(self, roles: Roles | None) -> WindowResult:
        lay = self.lay
        unknown = self.unknown0.copy()
        vals = None if self.src_vals is None else np.where(unknown, 0, self.src_vals)
        if roles is None:
            layers = [np.ones(lay.k, dtype=bool)]
        else:
            vmask = np.zeros(lay.k, dtype=bool)
            vmask[roles.v] = True
            umask = np.zeros(lay.k, dtype=bool)
            umask[roles.u] = True
            layers = [vmask, umask]
        stalled = 0
        idx = 0
        while unknown[self.R0].any() and stalled < len(layers):
            layer = layers[idx % len(layers)]
            idx += 1
            gained = self._stage(unknown, vals, layer)
            stalled = 0 if gained else stalled + 1
        return self._finish(~unknown, vals)

    def _stage(self, unknown, vals, layer) -> bool:
        if not unknown.any():
            return False
        lay = self.lay
        sysm = _build_system(lay, unknown, self.recv_par,
                             None if vals is None else vals, self.par_vals)
        if sysm.a.size == 0:
            return False
        in_layer = layer[sysm.unk_l]
        nz = sysm.a != 0
        ok_rows = ~(nz[:, ~in_layer].any(axis=1)) & nz.any(axis=1)
        if not ok_rows.any():
            return False
        cols = np.nonzero(in_layer & nz[ok_rows].any(axis=0))[0]
        if cols.size == 0:
            return False
        a = sysm.a[np.ix_(np.nonzero(ok_rows)[0], cols)]
        rhs = None if sysm.rhs is None else sysm.rhs[ok_rows]
        rep = solve_erasures(a, rhs, lay.field)
        if rhs is not None and not rep.consistent:
            raise DecodeError("inconsistent received symbols")
        det = cols[rep.determined]
        if det.size == 0:
            return False
        unknown[sysm.unk_t[det], sysm.unk_l[det]] = False
        if vals is not None:
            vals[sysm.unk_t[det], sysm.unk_l[det]] = rep.values[rep.determined]
        return True

    def _finish(self, known, vals) -> WindowResult:
        ok = bool(known[self.R0].all())
        v = vals[self.R0].copy() if (ok and vals is not None) else None
        return WindowResult(ok, v, known, vals)


class PatternEngine:
    """Runs a decoder over an erasure pattern and memoises local outcomes."""

    def __init__(self, code: LayeredCode, decoder: str = "oracle", deadline: int | None = None):
        if decoder not in ("oracle", "staged"):
            raise ValueError(f"unknown decoder {decoder!r}")
        self.code = code
        self.decoder = decoder
        self.deadline = code.delay if deadline is None else deadline
        self.lay = _Layout(code)
        self.cache: dict = {}
        self.solves = 0

    def _decide(self, erased_win: np.ndarray, lost_win: np.ndarray) -> bool:
        m = self.lay.m
        e = erased_win.copy()
        # erasures of resolved steps older than the equation window do not matter
        e[:m][~lost_win[:m]] = False
        key = e.tobytes() + lost_win.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        prob = WindowProblem(self.lay, e, lost_win, self.deadline)
        res = prob.oracle() if self.decoder == "oracle" else prob.staged(self.code.roles)
        self.solves += 1
        self.cache[key] = res.recovered
        return res.recovered

    def lost_steps(self, erased: np.ndarray) -> np.ndarray:
        """Return a per-step array: 0 resolved, 1 lost, 2 deadline past the end."""
        erased = np.asarray(erased, dtype=bool)
        if erased.ndim == 1:
            steps = len(erased) // self.code.M
            erased = erased[: steps * self.code.M].reshape(steps, self.code.M)
        steps = erased.shape[0]
        m, D = self.lay.m, self.deadline
        status = np.zeros(steps, dtype=np.int8)
        needs = erased[:, self.lay.src_packets].any(axis=1)
        pad = 2 * m
        ep = np.zeros((steps + pad + D + 1, self.code.M), dtype=bool)
        ep[pad: pad + steps] = erased
        lostp = np.zeros(steps + pad, dtype=bool)
        for i in np.nonzero(needs)[0]:
            if i + D >= steps:
                status[i] = 2
                lostp[pad + i] = True
                continue
            win = ep[i: i + pad + D + 1]
            lw = lostp[i: i + pad]
            if not self._decide(win, lw):
                status[i] = 1
                lostp[pad + i] = True
        return status


def decode_pattern(code: LayeredCode, erased, decoder: str = "oracle", deadline: int | None = None) -> np.ndarray:
    """Per-step status (0 resolved, 1 lost, 2 past the end) for an erasure pattern."""
    return PatternEngine(code, decoder, deadline).lost_steps(erased)


class DecoderState:
    """Receiver state for value-level streaming decoding.

    Packets are pushed step by step; ``None`` marks an erased packet.  The
    state keeps source knowledge for the last ``2m + T + 1`` steps.
    """

    def __init__(self, code: LayeredCode):
        self.code = code
        self.lay = _Layout(code)
        self.src = {}
        self.src_known = {}
        self.par = {}
        self.erased = {}
        self.lost: set = set()
        self.resolved: dict = {}

    def push(self, step: int, packets) -> None:
        code = self.code
        k = code.k
        src = np.zeros(k, dtype=np.int64)
        known = np.zeros(k, dtype=bool)
        par = np.zeros(code.conv.n - k, dtype=np.int64)
        er = np.zeros(code.M, dtype=bool)
        for j, (layout, vals) in enumerate(zip(code.packets, packets)):
            if vals is None:
                er[j] = True
                continue
            vals = np.asarray(vals, dtype=np.int64)
            for c, v in zip(layout, vals):
                if c < 0:
                    continue
                if c < k:
                    src[c] = v
                    known[c] = True
                else:
                    par[c - k] = v
        self.src[step] = src
        self.src_known[step] = known
        self.par[step] = par
        self.erased[step] = er
        if known.all():
            self.resolved[step] = src
        keep = step - 2 * code.conv.m - code.delay - 2
        for d in (self.src, self.src_known, self.par, self.erased):
            for s in [s for s in d if s < keep]:
                del d[s]
        for s in [s for s in self.resolved if s < keep]:
            del self.resolved[s]
        self.lost = {s for s in self.lost if s >= keep}

    def _problem(self, i: int, deadline: int) -> WindowProblem:
        lay = self.lay
        m = lay.m
        R0 = 2 * m
        L = R0 + deadline + 1
        M, k, r = self.code.M, self.code.k, self.code.conv.n - self.code.k
        erased = np.zeros((L, M), dtype=bool)
        src = np.zeros((L, k), dtype=np.int64)
        par = np.zeros((L, r), dtype=np.int64)
        lost = np.zeros(R0, dtype=bool)
        for w in range(L):
            t = i - R0 + w
            if t < 0:
                continue
            if t not in self.erased:
                if t <= i + deadline:
                    raise DecodeError(f"step {t} has not been received yet")
                continue
            erased[w] = self.erased[t]
            par[w] = self.par[t]
            if t in self.resolved:
                src[w] = self.resolved[t]
            else:
                src[w] = self.src[t]
            if w < R0 and t not in self.resolved:
                lost[w] = True
        return WindowProblem(lay, erased, lost, deadline, src, par)

    def _conclude(self, i: int, res: WindowResult):
        if res.recovered:
            self.resolved[i] = res.values
            return res.values
        self.lost.add(i)
        return None


def decode_oracle(code: LayeredCode, state: DecoderState, i: int, deadline: int | None = None):
    """Recover s[i] from everything received up to step i+T, or return None."""
    if i in state.resolved:
        return state.resolved[i]
    dl = code.delay if deadline is None else deadline
    return state._conclude(i, state._problem(i, dl).oracle())


def decode_staged(code: LayeredCode, state: DecoderState, i: int, deadline: int | None = None):
    """Layer-by-layer recovery of s[i] by step i+T, or None."""
    if i in state.resolved:
        return state.resolved[i]
    dl = code.delay if deadline is None else deadline
    return state._conclude(i, state._problem(i, dl).staged(code.roles))


decode_macro_staged = decode_staged


def stream_decode(code: LayeredCode, sources, erased, decoder: str = "oracle", deadline: int | None = None):
    """Encode ``sources``, erase packets, decode every step in order.

    Returns ``(decoded, status)`` where missing symbols are None and
    status follows :func:`decode_pattern`.
    """
    sources = np.asarray(sources, dtype=np.int64)
    steps = sources.shape[0]
    erased = np.asarray(erased, dtype=bool).reshape(steps, code.M)
    tx = encode(code, sources)
    st = DecoderState(code)
    dl = code.delay if deadline is None else deadline
    fn = decode_oracle if decoder == "oracle" else decode_staged
    out = [None] * steps
    status = np.full(steps, 2, dtype=np.int8)
    for t in range(steps):
        st.push(t, [None if erased[t, j] else tx[t][j] for j in range(code.M)])
        i = t - dl
        if i >= 0:
            out[i] = fn(code, st, i, dl)
            status[i] = 0 if out[i] is not None else 1
    for i in range(max(0, steps - dl), steps):
        if i in st.resolved:
            out[i] = st.resolved[i]
    return out, status
