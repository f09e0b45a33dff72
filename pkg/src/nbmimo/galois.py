"""Table-driven arithmetic in GF(2**beta).

Elements are integers in ``[0, q)`` read as polynomials over GF(2) in the
basis ``1, x, x**2, ...``.  Addition is XOR; multiplication goes through
log/antilog tables built from a fixed primitive polynomial.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

# Minimal-weight primitive polynomials, bit i <-> coefficient of x**i.
PRIMITIVE_POLYNOMIALS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}

# Dense q x q tables are only materialized up to this size.
_DENSE_LIMIT = 256


@dataclass(frozen=True, eq=False)
class GfField:
    """GF(q) with q = 2**beta.

    Attributes
    ----------
    beta : int
        Extension degree.
    reduction_polynomial : int
        Bitmask of the primitive polynomial used for reduction.
    log_table : np.ndarray
        Length ``q``; ``log_table[a]`` is the discrete log of ``a`` (entry 0
        is unused and set to 0).
    antilog_table : np.ndarray
        Length ``q - 1``; ``antilog_table[k] = alpha**k``.
    """

    beta: int
    reduction_polynomial: int
    log_table: np.ndarray = field(repr=False)
    antilog_table: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return 1 << self.beta

    @property
    def order(self) -> int:
        return self.q

    def mul(self, a, b):
        """Elementwise product; accepts scalars or integer arrays."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.q == 2:
            out = a & b
        else:
            idx = (self.log_table[a] + self.log_table[b]) % (self.q - 1)
            out = np.where((a == 0) | (b == 0), 0, self.antilog_table[idx])
        return out if out.ndim else int(out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DomainError("zero has no multiplicative inverse")
        out = self.antilog_table[(-self.log_table[a]) % (self.q - 1)]
        return out if out.ndim else int(out)

    def add(self, a, b):
        out = np.bitwise_xor(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        return out if out.ndim else int(out)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    @property
    def mul_table(self) -> np.ndarray:
        """Dense ``q x q`` multiplication table (q <= 256 only)."""
        if self.q > _DENSE_LIMIT:
            raise ConfigurationError(f"dense tables not built for q={self.q}")
        cached = self.__dict__.get("_mul_table")
        if cached is None:
            r = np.arange(self.q)
            cached = self.mul(r[:, None], r[None, :])
            cached.setflags(write=False)
            object.__setattr__(self, "_mul_table", cached)
        return cached

    @property
    def xor_table(self) -> np.ndarray:
        cached = self.__dict__.get("_xor_table")
        if cached is None:
            r = np.arange(self.q)
            cached = r[:, None] ^ r[None, :]
            cached.setflags(write=False)
            object.__setattr__(self, "_xor_table", cached)
        return cached


def gf_build(beta: int) -> GfField:
    """Build the log/antilog tables of GF(2**beta), 1 <= beta <= 16."""
    if not isinstance(beta, (int, np.integer)) or not 1 <= beta <= 16:
        raise ConfigurationError(f"beta must be an integer in [1, 16], got {beta!r}")
    beta = int(beta)
    q = 1 << beta
    poly = PRIMITIVE_POLYNOMIALS[beta]

    antilog = np.zeros(q - 1, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    a = 1
    for k in range(q - 1):
        antilog[k] = a
        log[a] = k
        a <<= 1
        if a & q:
            a ^= poly
    if a != 1 or len(set(antilog.tolist())) != q - 1:
        raise ConfigurationError(f"polynomial {poly:#x} is not primitive")

    log.setflags(write=False)
    antilog.setflags(write=False)
    return GfField(beta, poly, log, antilog)


def gf_mul(f: GfField, a: int, b: int) -> int:
    return f.mul(a, b)


def gf_inv(f: GfField, a: int) -> int:
    """Multiplicative inverse; raises :class:`DomainError` for zero."""
    return f.inv(a)

