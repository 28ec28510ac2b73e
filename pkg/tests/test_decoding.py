import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamfec.decoding import LayeredCode, PatternEngine, decode_pattern, encode, stream_decode
from streamfec.equalrate import build_genms, build_midas, build_smds_baseline
from streamfec.unequalrate import build_unequal

CODES = {
    "midas234": build_midas(2, 3, 4),
    "midas235-block": build_midas(2, 3, 5, backend="block-mds"),
    "genms37": build_genms(3, 7),
    "macro233": build_unequal(2, 3, 3),
    "smds": build_smds_baseline("1/2", 3),
}


@pytest.mark.parametrize("name", sorted(CODES))
def test_no_erasures_reads_systematic_part(name):
    code = CODES[name]
    rng = np.random.default_rng(0)
    src = code.field.random(rng, (12, code.k))
    out, status = stream_decode(code, src, np.zeros(12 * code.M, dtype=bool))
    for i in range(12 - code.delay):
        assert status[i] == 0 and np.array_equal(out[i], src[i])


def test_zero_sources_give_zero_packets():
    code = CODES["macro233"]
    tx = encode(code, np.zeros((5, code.k), dtype=np.int64))
    assert all(not p.any() for step in tx for p in step)


def test_macro_q_entries_repeat_u_with_parity():
    code = CODES["macro233"]
    rng = np.random.default_rng(2)
    src = code.field.random(rng, (6, code.k))
    x = encode(code, src)
    conv = code.conv
    f = code.field
    # column 2 ends with q_j[i] = u_j[i-3] + p_j[i]; p from the v rows only
    for i in range(3, 6):
        p = np.zeros(3, dtype=np.int64)
        for d in range(4):
            p = f.add(p, f.matmul(src[i - d][None, 3:], conv.H[d][3:])[0])
        q = f.add(src[i - 3][:3], p)
        assert np.array_equal(x[i][1][2:], q)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(CODES)), st.integers(0, 2**32), st.floats(0.05, 0.35))
def test_value_decoding_matches_pattern_engine(name, seed, p):
    code = CODES[name]
    rng = np.random.default_rng(seed)
    steps = 18
    src = code.field.random(rng, (steps, code.k))
    erased = rng.random(steps * code.M) < p
    for dec in ("staged", "oracle"):
        out, status = stream_decode(code, src, erased, dec)
        pat = decode_pattern(code, erased, dec)
        for i in range(steps - code.delay):
            want_lost = pat[i] == 1
            assert (status[i] == 1) == want_lost
            if not want_lost:
                assert np.array_equal(out[i], src[i])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(CODES)), st.integers(0, 2**32), st.floats(0.05, 0.5))
def test_oracle_never_worse_than_staged(name, seed, p):
    code = CODES[name]
    rng = np.random.default_rng(seed)
    erased = rng.random(40 * code.M) < p
    st_ = PatternEngine(code, "staged").lost_steps(erased)
    orc = PatternEngine(code, "oracle").lost_steps(erased)
    assert not np.any((orc == 1) & (st_ != 1))


def test_layered_code_json_roundtrip():
    code = CODES["macro233"]
    again = LayeredCode.from_json(code.to_json())
    assert again.rate == code.rate
    assert [p.tolist() for p in again.packets] == [p.tolist() for p in code.packets]
    erased = np.zeros(20 * 2, dtype=bool)
    erased[[6, 7, 8]] = True
    assert np.array_equal(decode_pattern(again, erased), decode_pattern(code, erased))


def test_layout_must_cover_all_coordinates():
    code = CODES["genms37"]
    with pytest.raises(ValueError):
        LayeredCode("bad", {}, code.conv, (np.arange(code.conv.n - 1),), code.delay)
    with pytest.raises(ValueError):
        LayeredCode("bad", {}, code.conv, (np.arange(3), np.arange(3, code.conv.n)), code.delay)
