"""Systematic [n, k] MDS erasure code over GF(2^m).

The generator is ``[I_k ; P]``. ``P`` comes from a Vandermonde matrix on the
points 1, g, g^2, ... (g a field generator) brought to systematic form, then
its rows and columns are rescaled so the first row and first column of ``P``
are all ones. Rescaling keeps every square submatrix of ``P`` nonsingular, and
with a single parity row the code becomes a plain XOR parity.
"""

from __future__ import annotations

from functools import lru_cache

from streamrelay.gf import GF256, GaloisField

ERASED = None


class DecodeError(Exception):
    pass


class TooManyErasures(DecodeError):
    pass


class InconsistentSymbols(DecodeError):
    pass


class MdsCode:
    def __init__(self, n: int, k: int, field: GaloisField = GF256):
        if not 0 < k <= n:
            raise ValueError(f"need 0 < k <= n, got n={n}, k={k}")
        if n > field.order:
            raise ValueError(f"n={n} exceeds field size {field.order}")
        self.n = n
        self.k = k
        self.field = field
        self.parity = self._parity_map()
        self._rows = [[1 if c == r else 0 for c in range(k)] for r in range(k)] + self.parity

    def __repr__(self):
        return f"MdsCode(n={self.n}, k={self.k}, q={self.field.order})"

    def __eq__(self, other):
        return (
            isinstance(other, MdsCode)
            and (self.n, self.k, self.field.order) == (other.n, other.k, other.field.order)
        )

    def __hash__(self):
        return hash((self.n, self.k, self.field.order))

    def _parity_map(self) -> list[list[int]]:
        n, k, gf = self.n, self.k, self.field
        if n == k:
            return []
        points = [gf.pow(gf.generator, i) for i in range(min(n, gf.order - 1))]
        if n == gf.order:
            points.append(0)
        vander = [[gf.pow(x, c) for c in range(k)] for x in points]
        top_inv = gf.mat_inv(vander[:k])
        parity = gf.mat_mul(vander[k:], top_inv)
        col_scale = [gf.inv(v) for v in parity[0]]
        parity = [[gf.mul(v, s) for v, s in zip(row, col_scale)] for row in parity]
        return [[gf.div(v, row[0]) for v in row] for row in parity]

    def generator_row(self, i: int) -> list[int]:
        return self._rows[i]

    def encode(self, msg) -> list[int]:
        msg = [int(m) for m in msg]
        if len(msg) != self.k:
            raise ValueError(f"message length {len(msg)} != k={self.k}")
        dot = self.field.dot
        return msg + [dot(row, msg) for row in self.parity]

    @lru_cache(maxsize=4096)
    def recovery_matrix(self, positions: tuple[int, ...]) -> list[list[int]]:
        """Inverse of the generator rows at ``positions`` (exactly k of them)."""
        return self.field.mat_inv([self._rows[p] for p in positions])

    def solve(self, positions: tuple[int, ...], values) -> list[int]:
        """Message from k known code symbols at ``positions``."""
        dot = self.field.dot
        return [dot(row, values) for row in self.recovery_matrix(positions)]

    def decode_erasures(self, word) -> list[int]:
        if len(word) != self.n:
            raise ValueError(f"word length {len(word)} != n={self.n}")
        known = [i for i, s in enumerate(word) if s is not ERASED]
        if len(known) < self.k:
            raise TooManyErasures(
                f"too many erasures: {self.n - len(known)} > n-k={self.n - self.k}"
            )
        if known[self.k - 1] == self.k - 1:
            msg = [int(s) for s in word[: self.k]]
        else:
            pos = tuple(known[: self.k])
            msg = self.solve(pos, [int(word[p]) for p in pos])
        codeword = self.encode(msg)
        for i in known[self.k:]:
            if codeword[i] != int(word[i]):
                raise InconsistentSymbols(f"symbol {i} disagrees with the decoded codeword")
        return msg
