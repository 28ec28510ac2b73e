import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamfec.field import (RANDOM_CODE_PRIME, BinaryField, FieldError, FieldSpec, PrimeField, as_field,
                             clmul_mod, field_new, random_code_field)


def slow_gf2_mul(a, b, poly, m):
    # schoolbook shift-and-add, independent of the table implementation
    r = 0
    for i in range(m):
        if (b >> i) & 1:
            r ^= a << i
    for d in range(2 * m - 2, m - 1, -1):
        if (r >> d) & 1:
            r ^= poly << (d - m)
    return r


def test_gf256_known_products():
    f = field_new(FieldSpec.gf2(8, 0x11D))
    assert int(f.mul(0x80, 2)) == 0x1D
    assert int(f.mul(1, 0xAB)) == 0xAB
    assert int(f.mul(0, 0xAB)) == 0


def test_gf256_full_table_matches_schoolbook():
    f = field_new(FieldSpec.gf2(8, 0x11D))
    a = np.repeat(np.arange(256), 256)
    b = np.tile(np.arange(256), 256)
    got = f.mul(a, b)
    want = np.array([slow_gf2_mul(int(x), int(y), 0x11D, 8) for x, y in zip(a, b)])
    assert np.array_equal(got, want)
    assert all(clmul_mod(int(x), int(y), 0x11D, 8) == int(w) for x, y, w in zip(a[::97], b[::97], want[::97]))


def test_gf256_inverses():
    f = field_new(FieldSpec.gf2(8, 0x11D))
    for x in range(1, 256):
        assert int(f.mul(x, f.inv(x))) == 1


def test_small_prime_field():
    f = field_new(FieldSpec.prime(7))
    assert int(f.mul(3, 5)) == 1
    assert f.inv(3) == 5
    with pytest.raises((FieldError, ZeroDivisionError, ValueError)):
        f.inv(0)


def test_fermat_prime_field():
    f = as_field(65537)
    assert f.inv(2) == 32769
    assert int(f.mul(65536, 65536)) == 1


def test_random_code_field_size():
    f = random_code_field()
    assert isinstance(f, PrimeField)
    assert f.q == RANDOM_CODE_PRIME >= 2**20


@pytest.mark.parametrize("spec", [FieldSpec.prime(65536), FieldSpec.prime(1), FieldSpec.gf2(8, 0x100),
                                  FieldSpec.gf2(8, 0x11B ^ 0x2), FieldSpec.gf2(17, (1 << 17) | 9)])
def test_invalid_fields_rejected(spec):
    with pytest.raises(FieldError):
        field_new(spec)


def test_spec_json_roundtrip():
    for spec in (FieldSpec.prime(7), FieldSpec.gf2(4, 0x13)):
        assert FieldSpec.from_json(spec.to_json()) == spec
    with pytest.raises(FieldError):
        FieldSpec.from_json({"kind": "quaternion"})


FIELDS = [field_new(FieldSpec.prime(7)), field_new(FieldSpec.prime(65537)), random_code_field(),
          field_new(FieldSpec.gf2(4, 0x13)), field_new(FieldSpec.gf2(8, 0x11D))]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_field_axioms(f, data):
    el = st.integers(0, f.q - 1)
    a, b, c = data.draw(el), data.draw(el), data.draw(el)
    add, mul = (lambda x, y: int(f.add(x, y))), (lambda x, y: int(f.mul(x, y)))
    assert add(a, b) == add(b, a)
    assert mul(a, b) == mul(b, a)
    assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert add(a, int(f.neg(a))) == 0
    if a:
        assert mul(a, f.inv(a)) == 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(FIELDS), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32))
def test_matmul_matches_elementwise(f, r, k, c, seed):
    rng = np.random.default_rng(seed)
    a, b = f.random(rng, (r, k)), f.random(rng, (k, c))
    got = f.matmul(a, b)
    for i in range(r):
        for j in range(c):
            acc = 0
            for t in range(k):
                acc = int(f.add(acc, f.mul(int(a[i, t]), int(b[t, j]))))
            assert int(got[i, j]) == acc


def test_binary_field_kind():
    assert isinstance(as_field({"kind": "gf2", "m": 8, "poly": "0x11d"}), BinaryField)
