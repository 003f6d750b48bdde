"""Arithmetic in GF(2^8) and GF(2^16).

Symbols are plain ints in ``[0, q)``; a :class:`GaloisField` instance owns the
log/antilog tables. :class:`FieldElem` is a small value wrapper for callers
that want field checking on every operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

# Canonical reduction polynomials, one per supported order.
#   GF(2^8):  x^8 + x^4 + x^3 + x + 1            (the AES polynomial)
#   GF(2^16): x^16 + x^12 + x^3 + x + 1
CANONICAL_POLY = {256: 0x11B, 65536: 0x1100B}


class FieldError(ValueError):
    pass


def _clmul_reduce(x: int, y: int, poly: int, order: int) -> int:
    """Shift-and-add multiply, reduced modulo ``poly``. Slow; used to seed the tables."""
    r = 0
    while y:
        if y & 1:
            r ^= x
        y >>= 1
        x <<= 1
        if x & order:
            x ^= poly
    return r


@dataclass(frozen=True)
class FieldSpec:
    order: int = 256
    poly: int = 0x11B

    def __post_init__(self):
        if self.order not in CANONICAL_POLY:
            raise FieldError(f"unsupported field order {self.order}; expected 256 or 65536")
        if self.poly != CANONICAL_POLY[self.order]:
            raise FieldError(
                f"GF({self.order}) uses reduction polynomial {CANONICAL_POLY[self.order]:#x}, got {self.poly:#x}"
            )


class GaloisField:
    """Table-driven GF(2^m) for the canonical polynomial of ``spec.order``."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec
        self.order = q = spec.order
        self.poly = spec.poly
        self.generator = self._find_generator()
        g = self.generator
        exp = [0] * (2 * (q - 1))
        log = [0] * q
        x = 1
        for i in range(q - 1):
            exp[i] = x
            log[x] = i
            x = _clmul_reduce(x, g, self.poly, q)
        exp[q - 1:] = exp[: q - 1]
        self.exp = exp
        self.log = log

    def _find_generator(self) -> int:
        q = self.order
        factors = [p for p in (3, 5, 17, 257) if (q - 1) % p == 0]
        for g in range(2, q):
            if all(self._slow_pow(g, (q - 1) // p) != 1 for p in factors):
                return g
        raise FieldError("no generator found")  # pragma: no cover

    def _slow_pow(self, x: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = _clmul_reduce(r, x, self.poly, self.order)
            x = _clmul_reduce(x, x, self.poly, self.order)
            e >>= 1
        return r

    def __repr__(self):
        return f"GaloisField(order={self.order}, poly={self.poly:#x})"

    @staticmethod
    def add(x: int, y: int) -> int:
        return x ^ y

    sub = add

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        return self.exp[self.log[x] + self.log[y]]

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self.exp[(self.order - 1 - self.log[x]) % (self.order - 1)]

    def div(self, x: int, y: int) -> int:
        if y == 0:
            raise ZeroDivisionError("division by zero")
        if x == 0:
            return 0
        return self.exp[(self.log[x] - self.log[y]) % (self.order - 1)]

    def pow(self, x: int, e: int) -> int:
        if e == 0:
            return 1
        if x == 0:
            return 0
        return self.exp[(self.log[x] * e) % (self.order - 1)]

    def dot(self, coeffs, values) -> int:
        exp, log = self.exp, self.log
        acc = 0
        for c, v in zip(coeffs, values):
            if c and v:
                acc ^= exp[log[c] + log[v]]
        return acc

    def mat_inv(self, rows: list[list[int]]) -> list[list[int]]:
        """Gauss-Jordan inverse of a square matrix; raises FieldError if singular."""
        n = len(rows)
        aug = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
        for col in range(n):
            piv = next((r for r in range(col, n) if aug[r][col]), None)
            if piv is None:
                raise FieldError("singular matrix")
            aug[col], aug[piv] = aug[piv], aug[col]
            s = self.inv(aug[col][col])
            aug[col] = [self.mul(s, v) for v in aug[col]]
            for r in range(n):
                if r != col and aug[r][col]:
                    f = aug[r][col]
                    aug[r] = [v ^ self.mul(f, p) for v, p in zip(aug[r], aug[col])]
        return [row[n:] for row in aug]

    def mat_mul(self, a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
        cols = list(zip(*b))
        return [[self.dot(row, col) for col in cols] for row in a]


@lru_cache(maxsize=None)
def get_field(order: int = 256) -> GaloisField:
    return GaloisField(FieldSpec(order, CANONICAL_POLY.get(order, 0)))


GF256 = get_field(256)


@dataclass(frozen=True)
class FieldElem:
    value: int
    order: int = 256

    def __post_init__(self):
        if self.order not in CANONICAL_POLY:
            raise FieldError(f"unsupported field order {self.order}")
        if not 0 <= self.value < self.order:
            raise FieldError(f"value {self.value} outside GF({self.order})")

    @property
    def field(self) -> GaloisField:
        return get_field(self.order)

    def _check(self, other: FieldElem):
        if not isinstance(other, FieldElem):
            return NotImplemented
        if other.order != self.order:
            raise FieldError(f"mismatched fields GF({self.order}) and GF({other.order})")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FieldElem(self.value ^ other.value, self.order)

    __sub__ = __add__

    def __mul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FieldElem(self.field.mul(self.value, other.value), self.order)

    def __truediv__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def inverse(self) -> FieldElem:
        return FieldElem(self.field.inv(self.value), self.order)

    def __int__(self):
        return self.value

    def __repr__(self):
        width = 2 if self.order == 256 else 4
        return f"FieldElem(0x{self.value:0{width}X}, GF({self.order}))"


def add(x: FieldElem, y: FieldElem) -> FieldElem:
    return x + y


def mul(x: FieldElem, y: FieldElem) -> FieldElem:
    return x * y


def inv(x: FieldElem) -> FieldElem:
    return x.inverse()
