"""Run codes over erasure traces and tabulate deadline losses."""
from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import (ErasureTrace, FritchmanParams, GEParams, burst_histogram, derive_seeds,
                       sample_fritchman, sample_ge)
from .config import build_code, channel_params, code_label
from .decoding import LayeredCode, PatternEngine

__all__ = ["SimReport", "SimConfig", "run", "sweep", "sweep_csv", "histogram_csv", "TraceTooShort",
           "CSV_FIELDS", "threads"]

log = logging.getLogger(__name__)

CSV_FIELDS = ["family", "params", "channel", "epsilon_or_beta", "seed", "symbols", "lost",
              "loss_rate", "runtime_ms"]


class TraceTooShort(ValueError):
    pass


@dataclass
class SimReport:
    family: str
    params: str
    symbols: int
    lost: int
    decoder: str
    seed: int | None = None
    runtime_ms: float = 0.0
    histogram: dict = field(default_factory=dict)
    lost_steps: np.ndarray | None = None
    solves: int = 0

    @property
    def loss_rate(self) -> float:
        return self.lost / self.symbols if self.symbols else 0.0


def _warmup(code: LayeredCode, T: int) -> int:
    return code.memory + T


def run(code: LayeredCode, trace, T: int | None = None, decoder: str = "oracle",
        engine: PatternEngine | None = None, keep_steps: bool = False) -> SimReport:
    """Decode every source step of ``trace`` by its deadline and count losses.

    The trace is indexed by channel packet (M per source step).  The first
    ``memory + T`` steps and steps whose deadline falls past the end are not
    counted.
    """
    T = code.delay if T is None else T
    e = trace.erased if isinstance(trace, ErasureTrace) else np.asarray(trace, dtype=bool)
    M = code.M
    steps = e.size // M
    warm = _warmup(code, T)
    if steps < warm + T + 1:
        raise TraceTooShort(f"trace of {steps} steps is shorter than warmup plus deadline ({warm + T + 1})")
    eng = engine or PatternEngine(code, decoder, T)
    t0 = time.perf_counter()
    status = eng.lost_steps(e[: steps * M])
    counted = slice(warm, steps - T)
    lost = int((status[counted] == 1).sum())
    symbols = steps - T - warm
    ms = (time.perf_counter() - t0) * 1000
    return SimReport(code.family, code_label(code), symbols, lost, eng.decoder,
                     getattr(trace, "seed", None), ms, burst_histogram(e),
                     np.flatnonzero(status == 1) if keep_steps else None, eng.solves)


@dataclass
class SimConfig:
    """A grid of channel settings shared by a list of codes.

    ``grid_param`` names the channel parameter varied over ``grid``.  Each
    grid point draws one trace (seed derived from ``seed``) used by every
    code, so comparisons at a point see identical erasures.  ``length`` is
    in channel packets.  ``alpha_scale`` multiplies the channel's alpha and
    is reported in the channel column.
    """

    codes: list
    channel: dict
    grid_param: str
    grid: list
    length: int = 10**7
    seed: int = 0
    decoder: str = "oracle"
    alpha_scale: float = 1.0
    timing: bool = False

    def __post_init__(self):
        if not self.grid:
            raise ValueError("grid must not be empty")
        if not self.codes:
            raise ValueError("no codes to simulate")
        if self.grid_param not in ("eps", "beta", "alpha"):
            raise ValueError("grid_param must be eps, beta or alpha")

    @classmethod
    def from_json(cls, obj: dict) -> "SimConfig":
        keys = ("codes", "channel", "grid_param", "grid", "length", "seed", "decoder", "alpha_scale", "timing")
        return cls(**{k: obj[k] for k in keys if k in obj})


def threads() -> int:
    try:
        return max(1, int(os.environ.get("FEC_THREADS", "1")))
    except ValueError:
        return 1


def _channel_for(cfg: SimConfig, value):
    ch = dict(cfg.channel)
    ch[cfg.grid_param] = value
    ch["alpha"] = float(ch["alpha"]) * cfg.alpha_scale
    return channel_params(ch)


def _sample(params, length, seed) -> ErasureTrace:
    if isinstance(params, FritchmanParams):
        return sample_fritchman(params, length, seed)
    return sample_ge(params, length, seed)


def _channel_name(params) -> str:
    if isinstance(params, GEParams):
        return f"ge(alpha={params.alpha:g};beta={params.beta:g};eps={params.eps:g})"
    return (f"fritchman(n={params.n_bad};alpha={params.alpha:g};beta={params.beta:g};"
            f"eps={params.eps:g})")


def _point(cfg: SimConfig, idx: int, value, seed: int, codes=None, engines=None) -> list[dict]:
    params = _channel_for(cfg, value)
    trace = _sample(params, cfg.length, seed)
    codes = codes or [build_code(c) for c in cfg.codes]
    rows = []
    for ci, code in enumerate(codes):
        eng = engines[ci] if engines is not None else None
        rep = run(code, trace, decoder=cfg.decoder, engine=eng)
        rows.append({"family": code.family, "params": code_label(code), "channel": _channel_name(params),
                     "epsilon_or_beta": f"{value:g}", "seed": seed, "symbols": rep.symbols, "lost": rep.lost,
                     "loss_rate": f"{rep.loss_rate:.6e}",
                     "runtime_ms": f"{rep.runtime_ms:.0f}" if cfg.timing else ""})
    return rows


def _point_task(args):
    cfg, idx, value, seed = args
    return _point(cfg, idx, value, seed)


def sweep(cfg: SimConfig) -> list[dict]:
    """One row per (grid point, code), in grid order then code order."""
    seeds = derive_seeds(cfg.seed, len(cfg.grid))
    workers = min(threads(), len(cfg.grid))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_point_task, [(cfg, i, v, s) for i, (v, s) in enumerate(zip(cfg.grid, seeds))]))
    else:
        codes = [build_code(c) for c in cfg.codes]
        engines = [PatternEngine(c, cfg.decoder) for c in codes]
        parts = [_point(cfg, i, v, s, codes, engines) for i, (v, s) in enumerate(zip(cfg.grid, seeds))]
    return [r for p in parts for r in p]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def histogram_csv(hist: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["length", "count"])
    for k, v in sorted(hist.items()):
        w.writerow([k, v])
    return buf.getvalue()
