"""Rate bounds and (N, B) tradeoff points, in exact rational arithmetic."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .convcode import SystematicConvCode, column_distance, column_span
from .decoding import LayeredCode
from .unequalrate import adapted_ms_rate, capacity

__all__ = ["as_fraction", "effective_delay", "upper_bound_feasible", "upper_bound_N", "midas_rate",
           "genms_rate", "TradeoffPoint", "table1_points", "tradeoff_csv", "Prop4Report",
           "prop4_check", "capacity_rows", "capacity_csv"]


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float literal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def effective_delay(T: int, W: int | None = None) -> int:
    return T if W is None else min(T, W - 1)


def upper_bound_feasible(R, N: int, B: int, T: int, W: int | None = None) -> bool:
    """Necessary condition (R / (1 - R)) B + N <= T_eff + 1 for any code of rate R."""
    R = as_fraction(R)
    if not 0 < R < 1:
        raise ValueError("rate must lie in (0, 1)")
    return R / (1 - R) * B + N <= effective_delay(T, W) + 1


def upper_bound_N(R, B: int, T: int, W: int | None = None) -> int:
    """Largest N allowed by the upper bound for burst B (capped at B)."""
    R = as_fraction(R)
    v = math.floor(effective_delay(T, W) + 1 - R / (1 - R) * B)
    return max(0, min(B, v))


def midas_rate(N: int, B: int, T_eff: int) -> Fraction:
    if not 1 <= N <= B <= T_eff:
        raise ValueError("need 1 <= N <= B <= T_eff")
    return Fraction(T_eff) / (T_eff + B + Fraction(B * N, T_eff - N + 1))


def genms_rate(B: int, T_eff: int) -> Fraction:
    return Fraction(T_eff, T_eff + B)


@dataclass(frozen=True)
class TradeoffPoint:
    family: str
    N: int
    B: int
    rate: Fraction
    T: int
    W: int
    feasible: bool


def table1_points(R, T: int, W: int | None = None) -> list[TradeoffPoint]:
    """Integer (N, B) points for each family at rate R and delay T.

    ``smds`` and ``ms`` give one point each; ``midas`` and ``upper`` give
    one point per burst length with N >= 1.
    """
    R = as_fraction(R)
    W = T + 1 if W is None else W
    Te = effective_delay(T, W)
    ratio = R / (1 - R)
    pts = []

    def add(fam, N, B):
        pts.append(TradeoffPoint(fam, N, B, R, T, W, upper_bound_feasible(R, N, B, T, W)))

    s = math.floor((1 - R) * (Te + 1))
    add("smds", s, s)
    add("ms", 1, math.floor(Te * min(1 / R - 1, Fraction(1))))
    B = 1
    while True:
        N = min(B, math.floor(Te - ratio * B))
        if N < 1:
            break
        add("midas", N, B)
        B += 1
    B = 1
    while (N := upper_bound_N(R, B, T, W)) >= 1:
        add("upper", N, B)
        B += 1
    return pts


def tradeoff_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "N", "B", "rate", "T", "W", "feasible"])
    for p in points:
        w.writerow([p.family, p.N, p.B, str(p.rate), p.T, p.W, int(p.feasible)])
    return buf.getvalue()


@dataclass
class Prop4Report:
    T: int
    rate: Fraction
    d_T: int
    c_T: int
    lhs: Fraction
    rhs: Fraction
    holds: bool
    design_ok: bool | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["rate"], out["lhs"], out["rhs"] = str(self.rate), str(self.lhs), str(self.rhs)
        return out


def prop4_check(code, T: int, method: str = "rank", N: int | None = None, B: int | None = None) -> Prop4Report:
    """Column distance / span tradeoff (R/(1-R)) c_T + d_T <= T + 1 + 1/(1-R).

    When ``N`` and ``B`` are given (or read from a layered code's design),
    also reports whether d_T >= N + 1 and c_T >= B + 1.
    """
    if isinstance(code, LayeredCode):
        d = code.design
        N = d.get("N") if N is None else N
        B = d.get("B") if B is None else B
        conv = code.conv
    else:
        conv = code
    if not isinstance(conv, SystematicConvCode):
        raise TypeError("expected a convolutional or layered code")
    R = Fraction(conv.k, conv.n)
    dT = column_distance(conv, T, "symbol", method)
    cT = column_span(conv, T, method)
    if R == 1:
        lhs, rhs, holds = Fraction(dT), Fraction(T + 1), dT <= T + 1
    else:
        lhs = R / (1 - R) * cT + dT
        rhs = T + 1 + 1 / (1 - R)
        holds = lhs <= rhs
    design = None
    if N is not None and B is not None:
        design = dT >= N + 1 and cT >= B + 1
    return Prop4Report(T, R, dT, cT, lhs, rhs, holds, design)


def capacity_rows(M: int, T: int, Bs) -> list[tuple]:
    """(B, b, B', capacity, adapted-MS rate) for each burst length."""
    rows = []
    for B in Bs:
        b, Bp = divmod(B, M)
        rows.append((B, b, Bp, capacity(M, T, B), adapted_ms_rate(M, T, B)))
    return rows


def capacity_csv(M: int, T: int, Bs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "T", "B", "b", "B_prime", "capacity", "capacity_float", "adapted_ms_rate"])
    for B, b, Bp, c, ms in capacity_rows(M, T, Bs):
        w.writerow([M, T, B, b, Bp, str(c), f"{float(c):.6f}", str(ms)])
    return buf.getvalue()
