"""Finite field arithmetic for code construction and erasure decoding.

Two kinds are supported: prime fields GF(p) and binary extension fields
GF(2^m) backed by log/antilog tables.  Elements are plain integers in
``[0, q)``; vectorised helpers accept numpy int64 arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_PRIME = 65537
DEFAULT_POLY = 0x11D

# Prime used for randomized constructions.  Below 2**26 so the elimination
# kernels can accumulate products without reducing after every update.
RANDOM_CODE_PRIME = 33554393


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "prime"
    p: int | None = DEFAULT_PRIME
    m: int | None = None
    poly: int | None = None

    @classmethod
    def prime(cls, p: int = DEFAULT_PRIME) -> "FieldSpec":
        return cls("prime", p, None, None)

    @classmethod
    def gf2(cls, m: int = 8, poly: int = DEFAULT_POLY) -> "FieldSpec":
        return cls("gf2", None, m, poly)

    def to_json(self) -> dict:
        if self.kind == "prime":
            return {"kind": "prime", "p": self.p}
        return {"kind": "gf2", "m": self.m, "poly": hex(self.poly)}

    @classmethod
    def from_json(cls, obj: dict) -> "FieldSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise FieldError("field spec must be an object with a 'kind' key")
        if obj["kind"] == "prime":
            return cls.prime(int(obj.get("p", DEFAULT_PRIME)))
        if obj["kind"] == "gf2":
            poly = obj.get("poly", DEFAULT_POLY)
            if isinstance(poly, str):
                poly = int(poly, 0)
            return cls.gf2(int(obj.get("m", 8)), int(poly))
        raise FieldError(f"unknown field kind {obj['kind']!r}")


def _is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


def _gf2_irreducible(poly: int, m: int) -> bool:
    from sympy import GF, Poly, symbols

    x = symbols("x")
    coeffs = [(poly >> i) & 1 for i in range(m, -1, -1)]
    return bool(Poly(coeffs, x, domain=GF(2)).is_irreducible)


def clmul_mod(a: int, b: int, poly: int, m: int) -> int:
    """Carry-less multiply of two GF(2^m) elements reduced by ``poly``."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return r


class Field:
    """Common interface.  ``q`` is the field order."""

    spec: FieldSpec
    q: int
    characteristic: int

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a: int) -> int:
        raise NotImplementedError

    def neg(self, a):
        return self.sub(0, a)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        r = 1
        a = int(a)
        while e:
            if e & 1:
                r = int(self.mul(r, a))
            a = int(self.mul(a, a))
            e >>= 1
        return r

    def random(self, rng: np.random.Generator, shape, nonzero: bool = False) -> np.ndarray:
        lo = 1 if nonzero else 0
        return rng.integers(lo, self.q, size=shape, dtype=np.int64)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Field) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec.to_json()})"


class PrimeField(Field):
    def __init__(self, p: int):
        self.spec = FieldSpec.prime(p)
        self.p = p
        self.q = p
        self.characteristic = p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        if self.p <= 2**31:
            return (a * b) % self.p
        return _object_mod_mul(a, b, self.p)

    def inv(self, a: int) -> int:
        a = int(a) % self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape[-1] == 0:
            return np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        # Split the contraction so partial sums stay inside int64.
        bound = max(1, (2**62) // max(1, (self.p - 1) ** 2))
        if bound >= a.shape[-1]:
            return (a @ b) % self.p
        out = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        for lo in range(0, a.shape[-1], bound):
            out = (out + (a[..., lo:lo + bound] @ b[lo:lo + bound]) % self.p) % self.p
        return out


def _object_mod_mul(a, b, p):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        r = (np.asarray(a, dtype=object) * np.asarray(b, dtype=object)) % p
        return r.astype(np.int64)
    return (a * b) % p


class BinaryField(Field):
    """GF(2^m) with log/antilog tables built from a generator element."""

    def __init__(self, m: int, poly: int):
        self.spec = FieldSpec.gf2(m, poly)
        self.m = m
        self.poly = poly
        self.q = 1 << m
        self.characteristic = 2
        order = self.q - 1
        gen = _find_generator(m, poly)
        exp = np.zeros(2 * order, dtype=np.int64)
        log = np.zeros(self.q, dtype=np.int64)
        x = 1
        for i in range(order):
            exp[i] = x
            log[x] = i
            x = clmul_mod(x, gen, poly, m)
        exp[order:] = exp[:order]
        self.exp = exp
        self.log = log
        self.generator = gen

    def add(self, a, b):
        return np.bitwise_xor(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else int(a) ^ int(b)

    sub = add

    def neg(self, a):
        return a

    def mul(self, a, b):
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            r = self.exp[self.log[a] + self.log[b]]
            return np.where((a == 0) | (b == 0), 0, r)
        a, b = int(a), int(b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        a = int(a)
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return int(self.exp[(self.q - 1 - self.log[a]) % (self.q - 1)])

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        for j in range(a.shape[1]):
            out ^= self.mul(a[:, j:j + 1], b[j:j + 1, :])
        return out


def _find_generator(m: int, poly: int) -> int:
    order = (1 << m) - 1
    from sympy import primefactors

    factors = primefactors(order) if order > 1 else []
    for g in range(2 if m > 1 else 1, 1 << m):
        ok = True
        for f in factors:
            # g^(order/f) == 1 means g is not primitive
            e, r, base = order // f, 1, g
            while e:
                if e & 1:
                    r = clmul_mod(r, base, poly, m)
                base = clmul_mod(base, base, poly, m)
                e >>= 1
            if r == 1:
                ok = False
                break
        if ok:
            return g
    raise FieldError("no generator found")


@lru_cache(maxsize=None)
def field_new(spec: FieldSpec) -> Field:
    """Build a field from its spec, validating primality or irreducibility."""
    if spec.kind == "prime":
        p = spec.p
        if p is None or p < 2 or not _is_prime(p):
            raise FieldError(f"modulus {p} is not prime")
        if p >= 2**62:
            raise FieldError("prime modulus too large")
        return PrimeField(p)
    if spec.kind == "gf2":
        m, poly = spec.m, spec.poly
        if m is None or not 1 <= m <= 16:
            raise FieldError("extension degree must be in 1..16")
        if poly is None or poly >> m != 1:
            raise FieldError(f"polynomial {poly!r} does not have degree {m}")
        if not _gf2_irreducible(poly, m):
            raise FieldError(f"polynomial {hex(poly)} is reducible over GF(2)")
        return BinaryField(m, poly)
    raise FieldError(f"unknown field kind {spec.kind!r}")


def as_field(f) -> Field:
    if isinstance(f, Field):
        return f
    if isinstance(f, FieldSpec):
        return field_new(f)
    if isinstance(f, dict):
        return field_new(FieldSpec.from_json(f))
    if isinstance(f, int):
        return field_new(FieldSpec.prime(f))
    raise FieldError(f"cannot interpret {f!r} as a field")


def default_field() -> Field:
    return field_new(FieldSpec.prime(DEFAULT_PRIME))


def random_code_field() -> Field:
    return field_new(FieldSpec.prime(RANDOM_CODE_PRIME))
