"""Exact arithmetic in F_p, F_{p^e} and towers F_{q^m}/F_q, on top of galois.

Elements are plain integers: the polynomial-basis coordinates written in base p, lowest
coefficient in the least significant digit, which is also galois' integer representation.
Arithmetic methods accept python ints or numpy integer arrays and broadcast; results come back
as int64 numpy arrays (0-d for scalars).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Any, Iterator, Sequence

import galois
import numpy as np

from errors import BadLength, FieldMismatch, FieldTooLarge, InvalidPrime, InvalidSpec

MAX_ORDER = 1 << 20


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """`poly` is a monic polynomial over F_p given low-to-high."""
    if len(poly) < 2:
        return False
    return galois.Poly(list(poly)[::-1], field=galois.GF(p)).is_irreducible()


@dataclass(frozen=True)
class Field:
    p: int
    e: int
    modulus: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.p**self.e

    def __repr__(self) -> str:
        return f"F_{self.q}"

    @cached_property
    def gf(self) -> type[galois.FieldArray]:
        if self.e == 1:
            return galois.GF(self.p)
        modulus = galois.Poly(list(self.modulus)[::-1], field=galois.GF(self.p))
        return galois.GF(self.q, irreducible_poly=modulus)

    def array(self, a: Any) -> galois.FieldArray:
        return self.gf(np.asarray(a, dtype=np.int64))

    @staticmethod
    def plain(x: galois.FieldArray) -> np.ndarray:
        return np.asarray(x.view(np.ndarray), dtype=np.int64)

    def digits(self, a: int) -> list[int]:
        a = int(a)
        return [(a // self.p**i) % self.p for i in range(self.e)]

    def from_digits(self, digits: Sequence[int]) -> int:
        if len(digits) != self.e:
            raise BadLength(f"expected {self.e} digits, got {len(digits)}")
        return sum(int(d) % self.p * self.p**i for i, d in enumerate(digits))

    def add(self, a: Any, b: Any) -> np.ndarray:
        return self.plain(self.array(a) + self.array(b))

    def sub(self, a: Any, b: Any) -> np.ndarray:
        return self.plain(self.array(a) - self.array(b))

    def neg(self, a: Any) -> np.ndarray:
        return self.plain(-self.array(a))

    def mul(self, a: Any, b: Any) -> np.ndarray:
        return self.plain(self.array(a) * self.array(b))

    def inv(self, a: Any) -> np.ndarray:
        x = self.array(a)
        if np.any(x == 0):
            raise ZeroDivisionError(f"0 has no inverse in {self}")
        return self.plain(np.reciprocal(x))

    def div(self, a: Any, b: Any) -> np.ndarray:
        return self.mul(a, self.inv(b))

    def power(self, a: Any, n: int) -> np.ndarray:
        x = self.array(a)
        if n == 0:
            return np.ones(x.shape, dtype=np.int64)
        return self.plain(x ** int(n))

    def element(self, value: int) -> FieldElement:
        return FieldElement(self, int(value))

    def elements(self) -> Iterator[FieldElement]:
        for value in range(self.q):
            yield FieldElement(self, value)


@dataclass(frozen=True)
class FieldElement:
    """An element of `field`; `value` is its base-p coordinate encoding in [0, q)."""

    field: Field
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.q:
            raise FieldMismatch(f"{self.value} is not an element of {self.field}")

    def _coerce(self, other: Any) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"cannot combine {self.field} with {other.field}")
            return other.value
        return int(other) % self.field.q

    def _wrap(self, value: Any) -> FieldElement:
        return FieldElement(self.field, int(value))

    def __add__(self, other: Any) -> FieldElement:
        return self._wrap(self.field.add(self.value, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other: Any) -> FieldElement:
        return self._wrap(self.field.sub(self.value, self._coerce(other)))

    def __rsub__(self, other: Any) -> FieldElement:
        return self._wrap(self.field.sub(self._coerce(other), self.value))

    def __mul__(self, other: Any) -> FieldElement:
        return self._wrap(self.field.mul(self.value, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> FieldElement:
        return self._wrap(self.field.div(self.value, self._coerce(other)))

    def __neg__(self) -> FieldElement:
        return self._wrap(self.field.neg(self.value))

    def __pow__(self, n: int) -> FieldElement:
        if n < 0:
            return self.inverse() ** (-n)
        return self._wrap(self.field.power(self.value, n))

    def inverse(self) -> FieldElement:
        return self._wrap(self.field.inv(self.value))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.field}({self.value})"


@lru_cache(maxsize=None)
def make_field(p: int, e: int = 1) -> Field:
    """Field of order p^e whose modulus is the lexicographically smallest irreducible monic
    polynomial, coefficients compared low-to-high."""
    if not galois.is_prime(p):
        raise InvalidPrime(f"{p} is not prime")
    if e < 1:
        raise InvalidSpec(f"extension degree must be >= 1, got {e}")
    if p**e > MAX_ORDER:
        raise FieldTooLarge(f"order {p}^{e} exceeds {MAX_ORDER}")
    for low in itertools.product(range(p), repeat=e):
        modulus = low + (1,)
        if is_irreducible(modulus, p):
            return Field(p, e, modulus)
    raise AssertionError("an irreducible polynomial exists in every degree")


def field_of_order(q: int) -> Field:
    if q < 2 or not galois.is_prime_power(q):
        raise InvalidPrime(f"{q} is not a prime power")
    (p,), (e,) = galois.factors(q)
    return make_field(p, e)


@dataclass(frozen=True)
class Tower:
    """F_{q^m} over F_q, realised as F_p^{e*m} with an embedded copy of F_q."""

    base: Field
    ext: Field
    m: int

    def __post_init__(self) -> None:
        if self.ext.p != self.base.p or self.ext.e != self.base.e * self.m:
            raise FieldMismatch(f"{self.ext} is not a degree-{self.m} extension of {self.base}")

    def __repr__(self) -> str:
        return f"{self.ext}/{self.base}"

    def _coerce(self, x: Any) -> Any:
        if isinstance(x, FieldElement):
            if x.field != self.ext:
                raise FieldMismatch(f"{x} is not in {self.ext}")
            return x.value
        return x

    @cached_property
    def embedding(self) -> np.ndarray:
        """ext encoding of every base-field element, indexed by base encoding.

        The base generator x goes to the smallest root of the base modulus in ext.
        """
        base, ext = self.base, self.ext
        if base.e == 1:
            return np.arange(base.p, dtype=np.int64)
        modulus = galois.Poly(list(base.modulus)[::-1], field=ext.gf)
        root = ext.gf(min(int(r) for r in modulus.roots()))
        powers = ext.gf([[int(root**i)] for i in range(base.e)])
        digits = ext.gf([base.digits(a) for a in range(base.q)])
        return ext.plain(digits @ powers).ravel()

    @cached_property
    def _to_base(self) -> np.ndarray:
        inverse = np.full(self.ext.q, -1, dtype=np.int64)
        inverse[self.embedding] = np.arange(self.base.q, dtype=np.int64)
        return inverse

    def to_base(self, x: Any) -> Any:
        image = self._to_base[np.asarray(self._coerce(x), dtype=np.int64)]
        if np.any(image < 0):
            raise FieldMismatch(f"element does not lie in {self.base}")
        return image

    def frobenius(self, x: Any, i: int = 1) -> Any:
        """x^(q^i)."""
        return self.ext.power(self._coerce(x), self.base.q**i)

    @cached_property
    def generator(self) -> int:
        proper = [d for d in range(1, self.m) if self.m % d == 0]
        return next(
            t for t in range(1, self.ext.q) if all(int(self.frobenius(t, d)) != t for d in proper)
        )

    @cached_property
    def basis(self) -> tuple[int, ...]:
        powers = [1]
        for _ in range(1, self.m):
            powers.append(int(self.ext.mul(powers[-1], self.generator)))
        return tuple(powers)

    @cached_property
    def _coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        q, m = self.base.q, self.m
        index = np.arange(q**m, dtype=np.int64)
        coords = (index[:, None] // q ** np.arange(m, dtype=np.int64)) % q
        values = np.zeros(q**m, dtype=np.int64)
        for i, b in enumerate(self.basis):
            values = self.ext.add(values, self.ext.mul(self.embedding[coords[:, i]], b))
        table = np.empty((q**m, m), dtype=np.int64)
        table[values] = coords
        return table, values

    def flatten(self, x: Any) -> np.ndarray:
        """Coordinates over F_q in the basis 1, t, ..., t^(m-1)."""
        table, _ = self._coordinates
        return table[np.asarray(self._coerce(x), dtype=np.int64)]

    def unflatten(self, vec: Any) -> Any:
        vec = np.asarray(vec, dtype=np.int64)
        if vec.shape[-1:] != (self.m,):
            raise BadLength(f"expected coordinate vectors of length {self.m}")
        _, values = self._coordinates
        return values[vec @ self.base.q ** np.arange(self.m, dtype=np.int64)]

    def trace(self, x: Any) -> Any:
        x = self._coerce(x)
        acc = np.zeros_like(np.asarray(x, dtype=np.int64))
        for i in range(self.m):
            acc = self.ext.add(acc, self.frobenius(x, i))
        return self.to_base(acc)


@lru_cache(maxsize=None)
def make_tower(base: Field, m: int) -> Tower:
    if m < 1:
        raise InvalidSpec(f"extension degree must be >= 1, got {m}")
    return Tower(base, make_field(base.p, base.e * m), m)


@dataclass(frozen=True)
class LinearizedPoly:
    """sum_i coeffs[i] * x^(q^i) with coefficients in tower.ext."""

    tower: Tower
    coeffs: tuple[int, ...]

    @property
    def is_monomial(self) -> bool:
        return not any(self.coeffs[1:])

    def __call__(self, x: Any) -> Any:
        return linearized_eval(self, x)


def linearized_eval(f: LinearizedPoly, x: Any) -> Any:
    tower = f.tower
    x = tower._coerce(x)
    acc = np.zeros_like(np.asarray(x, dtype=np.int64))
    for i, a in enumerate(f.coeffs):
        if a:
            acc = tower.ext.add(acc, tower.ext.mul(a, tower.frobenius(x, i)))
    return acc
