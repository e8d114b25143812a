"""Matrices over F_q, canonical subspaces, and the batched rank kernels used on the hot path.

Stacks of matrices are int64 arrays of shape (N, rows, cols) holding field encodings. Over F_2
the pairwise kernels switch to one uint64 word per row (bit j = column j).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import cached_property, total_ordering
from typing import Any, Iterator, Sequence

import numpy as np

from errors import (
    AmbientMismatch,
    BadLength,
    DimMismatch,
    EnumerationTooLarge,
    FieldMismatch,
    NotComplementary,
    ShapeMismatch,
)
from gf_core import Field

DEFAULT_CAP = 10**7
PAIR_CHUNK = 1 << 18


def matmul(field: Field, a: Any, b: Any) -> np.ndarray:
    """Matrix product over the field; leading batch dimensions broadcast like np.matmul."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if field.e == 1:
        return np.matmul(a, b) % field.p
    inner = a.shape[-1]
    if inner == 0:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        return np.zeros(batch + (a.shape[-2], b.shape[-1]), dtype=np.int64)
    acc = field.mul(a[..., :, 0, None], b[..., None, 0, :])
    for l in range(1, inner):
        acc = field.add(acc, field.mul(a[..., :, l, None], b[..., None, l, :]))
    return acc


def batch_rref(field: Field, stack: Any) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form of every matrix in an (N, r, c) stack, plus the ranks."""
    a = np.array(stack, dtype=np.int64)
    n, r, c = a.shape
    rank = np.zeros(n, dtype=np.int64)
    if n == 0 or r == 0:
        return a, rank
    rows = np.arange(r)
    for col in range(c):
        eligible = (a[:, :, col] != 0) & (rows[None, :] >= rank[:, None])
        has = eligible.any(axis=1)
        if not has.any():
            continue
        sel = np.nonzero(has)[0]
        src = eligible[sel].argmax(axis=1)
        dst = rank[sel]
        moved = a[sel, src].copy()
        a[sel, src] = a[sel, dst]
        pivot_rows = field.mul(moved, field.inv(moved[:, col])[:, None])
        a[sel, dst] = pivot_rows
        factors = a[sel, :, col].copy()
        factors[np.arange(len(sel)), dst] = 0
        a[sel] = field.sub(a[sel], field.mul(factors[:, :, None], pivot_rows[:, None, :]))
        rank[sel] += 1
        if rank.min() == r:
            break
    return a, rank


def pack_gf2(stack: Any) -> np.ndarray:
    stack = np.asarray(stack, dtype=np.uint64)
    v = stack.shape[-1]
    if v > 64:
        raise ShapeMismatch(f"packed F_2 rows hold at most 64 columns, got {v}")
    weights = np.left_shift(np.uint64(1), np.arange(v, dtype=np.uint64))
    return (stack * weights).sum(axis=-1, dtype=np.uint64)


def _gf2_ranks(words: np.ndarray) -> np.ndarray:
    # Each processed row keeps a distinct lowest set bit, so nonzero rows are independent.
    columns = [np.array(words[:, i], dtype=np.uint64) for i in range(words.shape[1])]
    rank = np.zeros(words.shape[0], dtype=np.int64)
    one, zero = np.uint64(1), np.uint64(0)
    for i, piv in enumerate(columns):
        rank += piv != 0
        low = piv & (~piv + one)
        for later in columns[i + 1 :]:
            later ^= np.where((later & low) != 0, piv, zero)
    return rank


def rank_words(field: Field, stack: np.ndarray) -> np.ndarray:
    """The representation the rank kernels consume: packed words over F_2, raw entries otherwise."""
    if field.q == 2 and stack.shape[-1] <= 64:
        return pack_gf2(stack)
    return np.asarray(stack, dtype=np.int64)


def stacked_ranks(field: Field, rows: np.ndarray) -> np.ndarray:
    if rows.dtype == np.uint64 and rows.ndim == 2:
        return _gf2_ranks(rows)
    return batch_rref(field, rows)[1]


def intersection_dims(field: Field, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """dim(U ∩ W) for aligned batches of bases, via dim U + dim W - rank of the stack."""
    ranks = stacked_ranks(field, np.concatenate([left, right], axis=1))
    return left.shape[1] + right.shape[1] - ranks


def pair_blocks(n: int, chunk_size: int = PAIR_CHUNK) -> Iterator[tuple[int, int]]:
    """Row ranges [start, stop) whose pairs {(i, j): start <= i < stop, i < j < n} fit one chunk."""
    start = 0
    while start < n - 1:
        stop, total = start, 0
        while stop < n - 1 and (total == 0 or total + (n - 1 - stop) <= chunk_size):
            total += n - 1 - stop
            stop += 1
        yield start, stop
        start = stop


def block_pairs(n: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    counts = n - 1 - np.arange(start, stop, dtype=np.int64)
    first = np.repeat(np.arange(start, stop, dtype=np.int64), counts)
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    second = np.arange(int(counts.sum()), dtype=np.int64) - offsets + first + 1
    return first, second


def pair_chunks(n: int, chunk_size: int = PAIR_CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Contiguous pieces of the pair index space {(i, j): i < j < n}, ordered by i then j."""
    for start, stop in pair_blocks(n, chunk_size):
        yield block_pairs(n, start, stop)


@dataclass(frozen=True, eq=False)
class Matrix:
    field: Field
    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=np.int64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"expected a 2-d matrix, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.field.q):
            raise FieldMismatch(f"matrix entry outside {self.field}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def zeros(cls, field: Field, rows: int, cols: int) -> Matrix:
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: Field, n: int) -> Matrix:
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def _check(self, other: Matrix) -> None:
        if self.field != other.field or self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} over {self.field} vs {other.shape} over {other.field}")

    def __add__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix(self.field, self.field.add(self.entries, other.entries))

    def __sub__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix(self.field, self.field.sub(self.entries, other.entries))

    def __matmul__(self, other: Matrix) -> Matrix:
        if self.field != other.field or self.cols != other.rows:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        return Matrix(self.field, matmul(self.field, self.entries, other.entries))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.field, self.shape, self.entries.tobytes()))

    def transpose(self) -> Matrix:
        return Matrix(self.field, self.entries.T)

    def rank(self) -> int:
        return rref(self)[1]


def rref(m: Matrix) -> tuple[Matrix, int]:
    if m.rows == 0 or m.cols == 0:
        return m, 0
    reduced = m.field.plain(m.field.array(m.entries).row_reduce())
    return Matrix(m.field, reduced), int(np.count_nonzero(reduced.any(axis=1)))


def inverse(field: Field, a: Any) -> np.ndarray:
    try:
        return field.plain(np.linalg.inv(field.array(a)))
    except np.linalg.LinAlgError as err:
        raise ZeroDivisionError("matrix is singular") from err


def nullspace(field: Field, a: Any) -> np.ndarray:
    """RREF basis of the left kernel {x : x a = 0}."""
    a = np.asarray(a, dtype=np.int64)
    if a.shape[1] == 0:
        return np.eye(a.shape[0], dtype=np.int64)
    kernel = field.plain(field.array(a).left_null_space()).reshape(-1, a.shape[0])
    return batch_rref(field, kernel[None])[0][0]


@total_ordering
@dataclass(frozen=True, eq=False)
class Subspace:
    """A k-space of F_q^v held by its canonical RREF basis (k x v)."""

    field: Field
    v: int
    basis: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.basis, dtype=np.int64)
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        if arr.ndim != 2 or arr.shape[1] != self.v:
            raise BadLength(f"basis of shape {arr.shape} does not live in F_q^{self.v}")
        object.__setattr__(self, "basis", arr)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def key(self) -> tuple[int, ...]:
        return tuple(self.basis.ravel().tolist())

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(int(np.flatnonzero(row)[0]) for row in self.basis)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.field == other.field and self.v == other.v and self.key == other.key

    def __hash__(self) -> int:
        return hash((self.v, self.key))

    def __lt__(self, other: Subspace) -> bool:
        return (self.v, self.k, self.key) < (other.v, other.k, other.key)

    def __repr__(self) -> str:
        rows = " ".join("".join(map(str, row)) for row in self.basis.tolist())
        return f"Subspace({self.field}, v={self.v}, k={self.k}, [{rows}])"


def is_rref(field: Field, basis: np.ndarray) -> bool:
    reduced, ranks = batch_rref(field, np.asarray(basis, dtype=np.int64)[None])
    return int(ranks[0]) == basis.shape[0] and np.array_equal(reduced[0], basis)


def subspace_from_rows(field: Field, v: int, rows: Sequence[Sequence[int]] | np.ndarray) -> Subspace:
    arr = np.asarray(rows, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, v)
    if arr.ndim != 2 or arr.shape[1] != v:
        raise BadLength(f"rows must have length {v}")
    reduced, ranks = batch_rref(field, arr[None])
    return Subspace(field, v, reduced[0, : int(ranks[0])])


def _check_ambient(u: Subspace, w: Subspace) -> None:
    if u.field != w.field or u.v != w.v:
        raise AmbientMismatch(f"F_{u.field.q}^{u.v} vs F_{w.field.q}^{w.v}")


def intersection_dimension(u: Subspace, w: Subspace) -> int:
    _check_ambient(u, w)
    stack = np.concatenate([u.basis, w.basis])[None]
    return u.k + w.k - int(stacked_ranks(u.field, rank_words(u.field, stack))[0])


def subspace_distance(u: Subspace, w: Subspace) -> int:
    return u.k + w.k - 2 * intersection_dimension(u, w)


def intersection(u: Subspace, w: Subspace) -> Subspace:
    """Explicit basis of U ∩ W from the left kernel of the stacked bases."""
    _check_ambient(u, w)
    kernel = nullspace(u.field, np.concatenate([u.basis, w.basis]))
    return subspace_from_rows(u.field, u.v, matmul(u.field, kernel[:, : u.k], u.basis))


def gaussian_binomial(v: int, k: int, q: int) -> int:
    if k < 0 or k > v:
        return 0
    num, den = 1, 1
    for i in range(k):
        num *= q ** (v - i) - 1
        den *= q ** (k - i) - 1
    return num // den


def enumerate_subspaces(field: Field, v: int, k: int, cap: int = DEFAULT_CAP) -> Iterator[Subspace]:
    """Every k-space of F_q^v once, in lexicographic order of the canonical basis entries."""
    count = gaussian_binomial(v, k, field.q)
    if count > cap:
        raise EnumerationTooLarge(f"{count} {k}-spaces of F_{field.q}^{v} exceed the cap {cap}")
    return _stream_subspaces(field, v, k)


def _pattern_keys(q: int, v: int, k: int, pivots: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    """Flattened RREF bases with the given pivot columns, in lexicographic order."""
    template = [0] * (k * v)
    for i, pc in enumerate(pivots):
        template[i * v + pc] = 1
    free = [i * v + j for i, pc in enumerate(pivots) for j in range(pc + 1, v) if j not in pivots]
    for values in itertools.product(range(q), repeat=len(free)):
        key = template.copy()
        for pos, x in zip(free, values):
            key[pos] = x
        yield tuple(key)


def _stream_subspaces(field: Field, v: int, k: int) -> Iterator[Subspace]:
    patterns = [_pattern_keys(field.q, v, k, pivots) for pivots in itertools.combinations(range(v), k)]
    for key in heapq.merge(*patterns):
        yield Subspace(field, v, np.array(key, dtype=np.int64).reshape(k, v))


def direct_sum_map(a: Subspace, b: Subspace, a_img: Subspace, b_img: Subspace) -> Matrix:
    """The linear map (acting on row vectors) sending the basis rows of A, B to those of A', B'."""
    field = a.field
    if a.v != b.v or a_img.v != b_img.v or {b.field, a_img.field, b_img.field} != {field}:
        raise DimMismatch("domain and image pieces must share ambient spaces and field")
    if a.k != a_img.k or b.k != b_img.k:
        raise DimMismatch(f"dimensions ({a.k}, {b.k}) do not match ({a_img.k}, {b_img.k})")
    domain = np.concatenate([a.basis, b.basis])
    image = np.concatenate([a_img.basis, b_img.basis])
    if a.k + b.k != a.v or int(batch_rref(field, domain[None])[1][0]) < a.v:
        raise NotComplementary("A and B do not split the domain")
    if int(batch_rref(field, image[None])[1][0]) < a.v:
        raise NotComplementary("A' and B' do not span an image of full dimension")
    return Matrix(field, matmul(field, inverse(field, domain), image))


def apply_map(u: Subspace, m: Matrix) -> Subspace:
    if u.field != m.field or u.v != m.rows:
        raise AmbientMismatch(f"cannot map F_q^{u.v} with a {m.rows}x{m.cols} matrix")
    return subspace_from_rows(u.field, m.cols, matmul(u.field, u.basis, m.entries))
