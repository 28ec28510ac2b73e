import numpy as np
import pytest

from streamfec.channels import ErasureTrace, GEParams, periodic_trace, sample_ge, validate_trace
from streamfec.config import ConfigError, build_code, channel_params, code_label
from streamfec.equalrate import build_genms, build_midas
from streamfec.simkit import CSV_FIELDS, SimConfig, TraceTooShort, histogram_csv, run, sweep, sweep_csv
from streamfec.unequalrate import build_unequal

SMALL = [{"family": "midas", "N": 2, "B": 3, "T": 4}, {"family": "genms", "B": 3, "T": 4},
         {"family": "smds", "rate": "4/9", "T": 4}]


def test_erasure_free_trace_loses_nothing():
    code = build_midas(2, 3, 4)
    rep = run(code, np.zeros(500, dtype=bool))
    assert rep.lost == 0 and rep.symbols == 500 - 4 - (code.memory + 4)
    assert rep.loss_rate == 0.0


def test_long_burst_causes_loss():
    code = build_genms(3, 7)
    e = np.zeros(200, dtype=bool)
    e[100:100 + 3 + 7 + 1] = True
    rep = run(code, e, keep_steps=True)
    assert rep.lost > 0 and set(rep.lost_steps.tolist()) <= set(range(100, 111))
    assert rep.histogram == {11: 1}


def test_admissible_traces_lose_nothing():
    rng = np.random.default_rng(3)
    code = build_midas(2, 3, 4)
    W = 5
    for period in (W + 3 - 2, 9, 13):
        tr = periodic_trace(period, 3, 300, int(rng.integers(0, period)))
        assert validate_trace(tr, 2, 3, W)[0]
        assert run(code, tr).lost == 0
    # scattered pairs far apart
    tr = ErasureTrace.from_positions([30, 32, 60, 61, 62, 90, 94], 200)
    assert validate_trace(tr, 2, 3, W)[0] and run(code, tr).lost == 0


def test_macro_trace_counts_steps():
    code = build_unequal(2, 3, 3)
    slots = np.zeros(2 * 100, dtype=bool)
    slots[2 * 50: 2 * 50 + 3] = True
    rep = run(code, slots)
    assert rep.lost == 0 and rep.symbols == 100 - 3 - (code.memory + 3)
    slots[2 * 50: 2 * 50 + 9] = True
    assert run(code, slots).lost > 0


def test_oracle_never_loses_more_than_staged():
    tr = sample_ge(GEParams(0.02, 0.4, 0.02), 20_000, seed=8)
    for spec in SMALL:
        code = build_code(spec)
        assert run(code, tr, decoder="oracle").lost <= run(code, tr, decoder="staged").lost


def test_trace_too_short():
    with pytest.raises(TraceTooShort):
        run(build_midas(2, 3, 4), np.zeros(10, dtype=bool))


def _cfg(**kw):
    base = dict(codes=SMALL, channel={"model": "ge", "alpha": 0.01, "beta": 0.3, "eps": 0.0},
                grid_param="eps", grid=[0.001, 0.01], length=20_000, seed=5)
    base.update(kw)
    return SimConfig(**base)


def test_sweep_rows_and_determinism():
    rows = sweep(_cfg())
    assert len(rows) == 2 * len(SMALL)
    assert [r["epsilon_or_beta"] for r in rows] == ["0.001"] * 3 + ["0.01"] * 3
    text = sweep_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_FIELDS)
    assert text == sweep_csv(sweep(_cfg()))
    assert all(r["runtime_ms"] == "" for r in rows)


def test_single_point_matches_run():
    cfg = _cfg(grid=[0.004])
    row = sweep(cfg)[0]
    trace = sample_ge(GEParams(0.01, 0.3, 0.004), cfg.length, row["seed"])
    rep = run(build_code(SMALL[0]), trace)
    assert (row["symbols"], row["lost"]) == (rep.symbols, rep.lost)
    assert row["params"] == code_label(build_code(SMALL[0]))


def test_parallel_sweep_matches_serial(monkeypatch):
    serial = sweep_csv(sweep(_cfg()))
    monkeypatch.setenv("FEC_THREADS", "2")
    assert sweep_csv(sweep(_cfg())) == serial


def test_alpha_scale_is_reported():
    rows = sweep(_cfg(grid=[0.0], alpha_scale=10.0))
    assert "alpha=0.1;" in rows[0]["channel"]


def test_config_errors():
    with pytest.raises(ValueError):
        _cfg(grid=[])
    with pytest.raises(ValueError):
        _cfg(grid_param="gamma")
    with pytest.raises(ConfigError):
        build_code({"family": "nope"})
    with pytest.raises(ConfigError):
        build_code({"family": "midas", "N": 2})
    with pytest.raises(ConfigError):
        channel_params({"model": "ge", "beta": 0.1})
    cfg = SimConfig.from_json({"codes": SMALL, "channel": {"alpha": 0.1, "beta": 0.2},
                               "grid_param": "beta", "grid": [0.2], "unknown": 1})
    assert cfg.length == 10**7


def test_histogram_csv():
    assert histogram_csv({3: 1, 1: 2}) == "length,count\n1,2\n3,1\n"
