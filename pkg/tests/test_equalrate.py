from fractions import Fraction

import numpy as np
import pytest

from streamfec.bounds import midas_rate, upper_bound_feasible
from streamfec.decoding import decode_pattern
from streamfec.equalrate import (CapExceeded, CodeConstructionError, build_genms, build_midas,
                                 build_smds_baseline, certify_channel, channel_patterns,
                                 count_channel_patterns, effective_delay, smds_capability)


def test_rates():
    assert build_midas(2, 3, 4).rate == Fraction(4, 9)
    assert build_midas(2, 3, 5, backend="block-mds").rate == Fraction(10, 19)
    assert build_genms(3, 7).rate == Fraction(7, 10)
    assert build_genms(4, 6, reduce=True).rate == Fraction(6, 10)
    assert build_midas(2, 9, 12).rate == midas_rate(2, 9, 12) == Fraction(44, 83)


def test_midas_n1_is_genms():
    c = build_midas(1, 3, 5)
    assert c.family == "genms" and c.rate == Fraction(5, 8)


def test_block_mds_sizes():
    c = build_midas(2, 3, 5, backend="block-mds")
    assert (c.k, c.conv.n) == (20, 38)
    assert c.field.q == 256


@pytest.mark.parametrize("args", [(3, 2, 4), (0, 2, 4), (2, 5, 4)])
def test_midas_parameter_errors(args):
    with pytest.raises(CodeConstructionError):
        build_midas(*args)


def test_genms_errors():
    with pytest.raises(CodeConstructionError):
        build_genms(8, 7)
    with pytest.raises(CodeConstructionError):
        build_genms(2, 7, backend="nope")


def test_window_shortens_delay():
    assert effective_delay(10, 5) == 4
    c = build_midas(2, 3, 10, W=6)
    assert c.memory == 5 and c.rate == midas_rate(2, 3, 5)


def test_smds_baseline_capability():
    assert smds_capability(Fraction(12, 23), 12) == 6
    c = build_smds_baseline(Fraction(12, 23), 12)
    assert (c.k, c.conv.n) == (12, 23) and c.design["N"] == 6
    assert build_smds_baseline(Fraction(9, 14), 4, M=20).design["B"] == 35


def test_channel_pattern_family():
    pats = channel_patterns(2, 1, 1)
    assert pats == [(0,), (1,)]
    # bursts of length 1..3 at 5 offsets, plus 10 pairs; singletons and
    # adjacent pairs coincide with bursts
    pats = channel_patterns(5, 2, 3)
    bursts = {tuple(range(o, o + L)) for o in range(5) for L in range(1, 4)}
    pairs = {(a, b) for a in range(5) for b in range(a + 1, 5)}
    assert set(pats) == bursts | pairs
    assert count_channel_patterns(5, 2, 3) == len(bursts | pairs)
    assert channel_patterns(4, 0, 0) == []


def test_certification_and_tightness_small():
    c = build_midas(2, 3, 4, W=5)
    assert certify_channel(c).passed
    assert not certify_channel(c, N=3).passed
    assert not certify_channel(c, B=4).passed
    # consistent with the upper bound: N=3 or B=4 at this rate is infeasible
    assert not upper_bound_feasible(c.rate, 3, 3, 4, 5)
    assert not upper_bound_feasible(c.rate, 2, 4, 4, 5)


def test_certificate_cap():
    c = build_genms(3, 7)
    with pytest.raises(CapExceeded):
        certify_channel(c, N=3, cap=10, sample=False)
    cert = certify_channel(c, cap=10, sample=True, seed=2)
    assert cert.sampled and cert.tested == 10


def test_certify_flag_retries_until_pass():
    c = build_midas(2, 3, 4, certify=True)
    assert c.params.get("certified") is True


def test_non_ideal_pattern():
    # burst {i, i+1} then an isolated erasure at i+3
    erased = np.zeros(40, dtype=bool)
    erased[[20, 21, 23]] = True
    rnd = build_midas(2, 3, 5)
    blk = build_midas(2, 3, 5, backend="block-mds")
    for dec in ("staged", "oracle"):
        assert not (decode_pattern(rnd, erased, dec) == 1).any()
        assert decode_pattern(blk, erased, dec, deadline=5)[20] == 1
        assert decode_pattern(blk, erased, dec, deadline=6)[20] == 0
        assert decode_pattern(blk, erased, dec, deadline=7)[20] == 0
