"""GF module - exact arithmetic in GF(q) for prime powers q

Elements are the integers 0..q-1; the base-p digits of an element are the
coefficients (lowest degree first) of a polynomial over GF(p), reduced modulo
a fixed monic irreducible polynomial of degree e when q = p^e with e > 1.
"""

import logging
import operator
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .constants import LOGGER_NAME, MAX_EXTENSION_DEGREE
from .errors import (
    DivisionByZero,
    EvenCharacteristic,
    FieldElementError,
    OrderNotPrimePower,
    UnsupportedField,
)

log = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True)
class FieldCtx:
    """Immutable arithmetic context for GF(q)

    The lookup tables are read-only numpy arrays, so vectorized code can
    index them directly: ``ctx.mul_t[a, b]`` works elementwise on arrays.
    """

    q: int
    p: int
    e: int
    modulus_poly: tuple[int, ...]  # low -> high, monic; () when e == 1
    add_t: np.ndarray = field(repr=False, compare=False)
    sub_t: np.ndarray = field(repr=False, compare=False)
    mul_t: np.ndarray = field(repr=False, compare=False)
    neg_t: np.ndarray = field(repr=False, compare=False)
    inv_t: np.ndarray = field(repr=False, compare=False)  # inv_t[0] is unused

    def __str__(self) -> str:
        return f"GF({self.q})"


def field_new(q: int, allow_even: bool = False) -> FieldCtx:
    """Build the arithmetic context for GF(q)"""
    p, e = _prime_power(q)
    if p == 2 and not allow_even:
        raise EvenCharacteristic(f"q={q} has characteristic 2 (pass allow_even to experiment)")
    if e > MAX_EXTENSION_DEGREE:
        raise UnsupportedField(
            f"q={q}: extension degree {e} exceeds {MAX_EXTENSION_DEGREE}"
        )

    modulus = smallest_irreducible(p, e) if e > 1 else ()
    add_t, mul_t = _build_tables(p, e, modulus)
    neg_t = np.argmin(add_t, axis=1)  # add_t[a, b] == 0 exactly once per row
    sub_t = add_t[:, neg_t]
    inv_t = np.zeros(q, dtype=np.int64)
    inv_t[1:] = np.argmax(mul_t[1:] == 1, axis=1)

    for table in (add_t, sub_t, mul_t, neg_t, inv_t):
        table.setflags(write=False)

    log.debug(f"Field - GF({q}) ready (p={p}, e={e}, modulus={modulus})")
    return FieldCtx(q, p, e, modulus, add_t, sub_t, mul_t, neg_t, inv_t)


def _prime_power(q: int) -> tuple[int, int]:
    """Split q into (p, e) with q = p^e, p prime"""
    q = operator.index(q)
    if q < 2:
        raise OrderNotPrimePower(f"q={q} is not a prime power")

    p = next((f for f in range(2, int(q**0.5) + 1) if q % f == 0), q)
    e, rest = 0, q
    while rest % p == 0:
        rest //= p
        e += 1
    if rest != 1:
        raise OrderNotPrimePower(f"q={q} is not a prime power")
    return p, e


def _digits(a: int, p: int, e: int) -> list[int]:
    return [(a // p**i) % p for i in range(e)]


def _poly_rem(num: list[int], den: list[int], p: int) -> list[int]:
    """Remainder of num modulo the monic polynomial den over GF(p)"""
    num = list(num)
    m = len(den) - 1
    for i in range(len(num) - 1, m - 1, -1):
        c = num[i]
        if c:
            for j in range(m + 1):
                num[i - m + j] = (num[i - m + j] - c * den[j]) % p
    return num[:m]


def is_irreducible(poly: tuple[int, ...], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2"""
    e = len(poly) - 1
    for m in range(1, e // 2 + 1):
        for lower in product(range(p), repeat=m):
            if not any(_poly_rem(poly, list(lower) + [1], p)):
                return False
    return True


def smallest_irreducible(p: int, e: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree e, ordering lower coefficients as a base-p integer"""
    for m in range(p**e):
        poly = tuple(_digits(m, p, e)) + (1,)
        if is_irreducible(poly, p):
            return poly
    raise UnsupportedField(f"no irreducible polynomial of degree {e} over GF({p})")


def _build_tables(p: int, e: int, modulus: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    q = p**e
    if e == 1:
        a = np.arange(q, dtype=np.int64)
        return np.add.outer(a, a) % p, np.multiply.outer(a, a) % p

    powers = p ** np.arange(e, dtype=np.int64)
    digits = np.array([_digits(a, p, e) for a in range(q)], dtype=np.int64)
    add_t = ((digits[:, None, :] + digits[None, :, :]) % p) @ powers

    mul_t = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(a, q):
            prod = np.convolve(digits[a], digits[b]) % p
            rem = _poly_rem([int(c) for c in prod], list(modulus), p)
            mul_t[a, b] = mul_t[b, a] = int(np.dot(rem, powers))
    return add_t, mul_t


def _check(ctx: FieldCtx, a) -> int:
    try:
        a = operator.index(a)
    except TypeError:
        raise FieldElementError(f"{a!r} is not a field element") from None
    if not 0 <= a < ctx.q:
        raise FieldElementError(f"{a} is outside 0..{ctx.q - 1}")
    return a


def f_add(ctx: FieldCtx, a: int, b: int) -> int:
    return int(ctx.add_t[_check(ctx, a), _check(ctx, b)])


def f_sub(ctx: FieldCtx, a: int, b: int) -> int:
    return int(ctx.sub_t[_check(ctx, a), _check(ctx, b)])


def f_neg(ctx: FieldCtx, a: int) -> int:
    return int(ctx.neg_t[_check(ctx, a)])


def f_mul(ctx: FieldCtx, a: int, b: int) -> int:
    return int(ctx.mul_t[_check(ctx, a), _check(ctx, b)])


def f_inv(ctx: FieldCtx, a: int) -> int:
    if _check(ctx, a) == 0:
        raise DivisionByZero(f"0 has no inverse in GF({ctx.q})")
    return int(ctx.inv_t[a])


def f_pow(ctx: FieldCtx, a: int, n: int) -> int:
    """Square-and-multiply; negative n uses the inverse"""
    a = _check(ctx, a)
    if n < 0:
        a, n = f_inv(ctx, a), -n
    result = 1
    while n:
        if n & 1:
            result = int(ctx.mul_t[result, a])
        a = int(ctx.mul_t[a, a])
        n >>= 1
    return result
