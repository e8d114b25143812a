"""Constant dimension codes: container, pairwise verification, cliques, stats and the .cdc format."""

from __future__ import annotations

import io
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from errors import (
    AmbientMismatch,
    DimMismatch,
    DuplicateCodeword,
    EmptyCode,
    InvalidSpec,
    ParseError,
    QSubspaceError,
)
from gf_core import Field, make_field
from subspace_linalg import (
    PAIR_CHUNK,
    Subspace,
    block_pairs,
    intersection_dims,
    is_rref,
    pair_blocks,
    pair_chunks,
    rank_words,
)

DEFAULT_SEED = 0xC0DE
EXHAUSTIVE = "exhaustive"
CROSS_PAIRS = 10**7
_HEADER = re.compile(r"^cdc 1 p=(\d+) e=(\d+) v=(\d+) k=(\d+) n=(\d+)$")


@dataclass(frozen=True, eq=False)
class ConstantDimensionCode:
    field: Field
    v: int
    k: int
    codewords: tuple[Subspace, ...]
    claimed_min_distance: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1 or self.k > self.v:
            raise InvalidSpec(f"codewords must be k-spaces with 1 <= k <= v, got k={self.k} v={self.v}")
        words = tuple(self.codewords)
        for w in words:
            if w.field != self.field or w.v != self.v:
                raise AmbientMismatch(f"{w!r} does not live in F_{self.field.q}^{self.v}")
            if w.k != self.k:
                raise DimMismatch(f"codeword of dimension {w.k} in a code of {self.k}-spaces")
        object.__setattr__(self, "codewords", words)

    @classmethod
    def canonical(cls, field: Field, v: int, k: int, codewords: Iterable[Subspace], **kw) -> ConstantDimensionCode:
        code = cls(field, v, k, tuple(codewords), **kw)
        return code.sorted()

    def __len__(self) -> int:
        return len(self.codewords)

    def __iter__(self) -> Iterator[Subspace]:
        return iter(self.codewords)

    def __getitem__(self, index: int) -> Subspace:
        return self.codewords[index]

    def __contains__(self, item: object) -> bool:
        return item in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConstantDimensionCode):
            return NotImplemented
        return (self.field, self.v, self.k, self.codewords) == (other.field, other.v, other.k, other.codewords)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ConstantDimensionCode(F_{self.field.q}, v={self.v}, k={self.k}, n={len(self)})"

    @cached_property
    def stack(self) -> np.ndarray:
        if not self.codewords:
            return np.zeros((0, self.k, self.v), dtype=np.int64)
        arr = np.stack([w.basis for w in self.codewords])
        arr.setflags(write=False)
        return arr

    @cached_property
    def rank_rows(self) -> np.ndarray:
        return rank_words(self.field, self.stack)

    @cached_property
    def _index(self) -> dict[Subspace, int]:
        index: dict[Subspace, int] = {}
        for i, w in enumerate(self.codewords):
            index.setdefault(w, i)
        return index

    def index_of(self, w: Subspace) -> int | None:
        return self._index.get(w)

    def canonical_order(self) -> np.ndarray:
        flat = self.stack.reshape(len(self), -1)
        return np.lexsort(flat.T[::-1])

    def sorted(self) -> ConstantDimensionCode:
        order = self.canonical_order()
        return self.subcode(order.tolist())

    def subcode(self, indices: Sequence[int]) -> ConstantDimensionCode:
        return ConstantDimensionCode(
            self.field, self.v, self.k, tuple(self.codewords[i] for i in indices), self.claimed_min_distance
        )

    def extended(self, extra: Iterable[Subspace]) -> ConstantDimensionCode:
        return ConstantDimensionCode(
            self.field, self.v, self.k, self.codewords + tuple(extra), self.claimed_min_distance
        )


@dataclass(frozen=True)
class Sampled:
    pairs: int
    seed: int = DEFAULT_SEED


@dataclass(frozen=True, eq=False)
class ByCopies:
    """Every pair inside a copy (codewords sharing an owner id) plus `pairs` seeded samples of pairs
    from different copies."""

    owners: np.ndarray
    pairs: int = CROSS_PAIRS
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class VerifyReport:
    n: int
    k: int
    threshold: int
    mode: str
    min_distance: int
    max_intersection_dim: int
    violating_pair: tuple[int, int] | None
    pairs_checked: int
    distance_histogram: dict[int, int] = field(default_factory=dict)
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.violating_pair is None


def find_duplicate(code: ConstantDimensionCode) -> tuple[int, int] | None:
    seen: dict[Subspace, int] = {}
    for i, w in enumerate(code.codewords):
        first = seen.setdefault(w, i)
        if first != i:
            return first, i
    return None


@dataclass
class _Tally:
    histogram: np.ndarray
    violation: tuple[int, int] | None = None
    max_dim: int = 0
    pairs: int = 0


def _tally(code: ConstantDimensionCode, first: np.ndarray, second: np.ndarray, threshold: int) -> _Tally:
    rows = code.rank_rows
    dims = intersection_dims(code.field, rows[first], rows[second])
    tally = _Tally(np.bincount(dims, minlength=code.k + 1), pairs=len(dims))
    if len(dims):
        tally.max_dim = int(dims.max())
        bad = np.flatnonzero(dims > threshold)
        if len(bad):
            tally.violation = (int(first[bad[0]]), int(second[bad[0]]))
    return tally


def _sample_pairs(
    n: int, count: int, seed: int, owners: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """`count` distinct pairs i < j drawn with the seed; with `owners`, only pairs across owners."""
    rng = np.random.default_rng(seed)
    keys = np.zeros(0, dtype=np.int64)
    while len(keys) < count:
        draw = rng.integers(0, n, size=(2, 2 * (count - len(keys)) + 16), dtype=np.int64)
        keep = draw[0] != draw[1]
        if owners is not None:
            keep &= owners[draw[0]] != owners[draw[1]]
        draw = draw[:, keep]
        lo, hi = draw.min(axis=0), draw.max(axis=0)
        keys = np.concatenate([keys, lo * n + hi])
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
    keys = keys[:count]
    return keys // n, keys % n


def _copy_pairs(owners: np.ndarray, chunk_size: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Every pair of codewords with the same owner, batched into chunks of about chunk_size."""
    order = np.argsort(owners, kind="stable")
    tasks: list[tuple[np.ndarray, np.ndarray]] = []
    firsts: list[np.ndarray] = []
    seconds: list[np.ndarray] = []
    size = 0
    for members in np.split(order, np.flatnonzero(np.diff(owners[order])) + 1):
        for a, b in pair_chunks(len(members), chunk_size):
            firsts.append(members[a])
            seconds.append(members[b])
            size += len(a)
            if size >= chunk_size:
                tasks.append((np.concatenate(firsts), np.concatenate(seconds)))
                firsts, seconds, size = [], [], 0
    if size:
        tasks.append((np.concatenate(firsts), np.concatenate(seconds)))
    return tasks


def verify(
    code: ConstantDimensionCode,
    max_allowed_intersection: int = 1,
    mode: str | Sampled | ByCopies = EXHAUSTIVE,
    workers: int | None = None,
    chunk_size: int = PAIR_CHUNK,
) -> VerifyReport:
    """Check every pair, a seeded sample of pairs, or every pair inside each copy plus a seeded
    sample across copies, for dim(U ∩ W) <= max_allowed_intersection."""
    n = len(code)
    if n == 0:
        raise EmptyCode("cannot verify a code without codewords")
    duplicate = find_duplicate(code)
    if duplicate is not None:
        raise DuplicateCodeword(*duplicate)

    total = n * (n - 1) // 2
    seed = None
    tasks: list | None = None
    if isinstance(mode, ByCopies):
        owners = np.asarray(mode.owners, dtype=np.int64)
        if owners.shape != (n,):
            raise InvalidSpec(f"expected {n} owner ids, got shape {owners.shape}")
        _, sizes = np.unique(owners, return_counts=True)
        cross_total = total - int((sizes * (sizes - 1) // 2).sum())
        if mode.pairs < cross_total:
            seed = mode.seed
            first, second = _sample_pairs(n, mode.pairs, mode.seed, owners)
            tasks = _copy_pairs(owners, chunk_size) + [
                (first[s : s + chunk_size], second[s : s + chunk_size]) for s in range(0, len(first), chunk_size)
            ]
            label = f"copies+sampled:{mode.pairs}"
    elif isinstance(mode, Sampled) and mode.pairs < total:
        seed = mode.seed
        first, second = _sample_pairs(n, mode.pairs, mode.seed)
        tasks = [(first[s : s + chunk_size], second[s : s + chunk_size]) for s in range(0, len(first), chunk_size)]
        label = f"sampled:{mode.pairs}"

    if tasks is None:
        tasks = list(pair_blocks(n, chunk_size))
        label = EXHAUSTIVE

        def run(task: tuple[int, int]) -> _Tally:
            return _tally(code, *block_pairs(n, *task), max_allowed_intersection)

    else:

        def run(task: tuple[np.ndarray, np.ndarray]) -> _Tally:
            return _tally(code, task[0], task[1], max_allowed_intersection)

    code.rank_rows  # populate the cache once
    histogram = np.zeros(code.k + 1, dtype=np.int64)
    violation, max_dim, pairs = None, 0, 0
    with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
        for tally in pool.map(run, tasks):
            histogram += tally.histogram[: code.k + 1]
            max_dim = max(max_dim, tally.max_dim)
            pairs += tally.pairs
            if violation is None:
                violation = tally.violation

    distances = {2 * code.k - 2 * d: int(c) for d, c in enumerate(histogram.tolist()) if c}
    return VerifyReport(
        n=n,
        k=code.k,
        threshold=max_allowed_intersection,
        mode=label,
        min_distance=2 * code.k - 2 * max_dim,
        max_intersection_dim=max_dim,
        violating_pair=violation,
        pairs_checked=pairs,
        distance_histogram=dict(sorted(distances.items())),
        seed=seed,
    )


def _disjoint_from_all(code: ConstantDimensionCode, candidate: int, kept: Sequence[int]) -> bool:
    if not kept:
        return True
    rows = code.rank_rows
    target = np.repeat(rows[candidate][None], len(kept), axis=0)
    return not intersection_dims(code.field, target, rows[list(kept)]).any()


def is_clique(code: ConstantDimensionCode, subset: Sequence[int]) -> bool:
    """True iff the codewords at `subset` pairwise meet only in 0."""
    subset = np.asarray(subset, dtype=np.int64)
    rows = code.rank_rows
    for start, stop in pair_blocks(len(subset), PAIR_CHUNK):
        first, second = block_pairs(len(subset), start, stop)
        if intersection_dims(code.field, rows[subset[first]], rows[subset[second]]).any():
            return False
    return True


def greedy_clique(code: ConstantDimensionCode, order: Sequence[int] | None = None) -> list[int]:
    """Maximal clique from a single scan; `order` defaults to canonical codeword order."""
    if order is None:
        order = code.canonical_order().tolist()
    kept: list[int] = []
    for idx in order:
        if _disjoint_from_all(code, idx, kept):
            kept.append(int(idx))
    return kept


@dataclass(frozen=True)
class CodeStats:
    n: int
    q: int
    v: int
    k: int
    distance_histogram: dict[int, int]
    min_distance: int
    clique_size: int
    clique_cap: int | None


def stats(
    code: ConstantDimensionCode,
    clique: Sequence[int] | None = None,
    workers: int | None = None,
) -> CodeStats:
    report = verify(code, max_allowed_intersection=code.k, workers=workers)
    if clique is None:
        clique = greedy_clique(code)
    q = code.field.q
    return CodeStats(
        n=len(code),
        q=q,
        v=code.v,
        k=code.k,
        distance_histogram=report.distance_histogram,
        min_distance=report.min_distance,
        clique_size=len(clique),
        clique_cap=q**code.k + 1 if code.v == 2 * code.k else None,
    )


def serialize(code: ConstantDimensionCode, sink: TextIO, comments: Iterable[str] = ()) -> None:
    f = code.field
    sink.write(f"cdc 1 p={f.p} e={f.e} v={code.v} k={code.k} n={len(code)}\n")
    if f.e > 1:
        sink.write("mod " + " ".join(map(str, f.modulus)) + "\n")
    for line in comments:
        sink.write(f"# {line}\n")
    stack = code.stack
    blocks = (
        "\n".join(" ".join(map(str, row)) for row in stack[idx].tolist()) for idx in code.canonical_order()
    )
    body = "\n\n".join(blocks)
    if body:
        sink.write(body + "\n")


def dumps(code: ConstantDimensionCode, comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    serialize(code, buf, comments)
    return buf.getvalue()


def _int_row(text: str, lineno: int, width: int, bound: int) -> list[int]:
    try:
        row = [int(tok) for tok in text.split()]
    except ValueError:
        raise ParseError(f"non-integer entry in {text!r}", lineno) from None
    if len(row) != width:
        raise ParseError(f"expected {width} entries, got {len(row)}", lineno)
    if any(x < 0 or x >= bound for x in row):
        raise ParseError(f"entry outside [0, {bound})", lineno)
    return row


def parse(source: TextIO | str, require_sorted: bool = True) -> ConstantDimensionCode:
    """Read a .cdc file; blocks must be strictly ascending unless require_sorted is off."""
    text = source if isinstance(source, str) else source.read()
    if not text.endswith("\n"):
        raise ParseError("missing trailing newline", text.count("\n") + 1)
    lines = [(no, line) for no, line in enumerate(text[:-1].split("\n"), start=1) if not line.startswith("#")]
    if not lines:
        raise ParseError("empty file", 1)

    no, header = lines[0]
    match = _HEADER.match(header)
    if match is None:
        raise ParseError(f"malformed header {header!r}", no)
    p, e, v, k, n = map(int, match.groups())
    try:
        fld = make_field(p, e)
    except QSubspaceError as exc:
        raise ParseError(str(exc), no) from exc

    rest = lines[1:]
    if e > 1:
        if not rest or not rest[0][1].startswith("mod "):
            raise ParseError("missing mod line for an extension field", rest[0][0] if rest else no)
        mod_no, mod_line = rest[0]
        modulus = tuple(_int_row(mod_line[4:], mod_no, e + 1, p))
        if modulus != fld.modulus:
            raise ParseError(f"modulus {modulus} differs from {fld.modulus}", mod_no)
        rest = rest[1:]

    codewords: list[Subspace] = []
    pos = 0
    for b in range(n):
        if b > 0:
            if pos >= len(rest) or rest[pos][1].strip():
                raise ParseError("expected a blank line between blocks", rest[pos][0] if pos < len(rest) else None)
            pos += 1
        if pos + k > len(rest):
            raise ParseError(f"block {b} is truncated", rest[-1][0] if rest else no)
        block_no = rest[pos][0]
        rows = [_int_row(line, lineno, v, fld.q) for lineno, line in rest[pos : pos + k]]
        basis = np.array(rows, dtype=np.int64).reshape(k, v)
        if not is_rref(fld, basis):
            raise ParseError(f"block {b} is not a canonical RREF basis", block_no)
        codeword = Subspace(fld, v, basis)
        if require_sorted and codewords and not codewords[-1] < codeword:
            raise ParseError(f"block {b} is not strictly after block {b - 1} in canonical order", block_no)
        codewords.append(codeword)
        pos += k
    if pos != len(rest):
        raise ParseError("unexpected content after the last block", rest[pos][0])
    try:
        return ConstantDimensionCode(fld, v, k, tuple(codewords))
    except QSubspaceError as exc:
        raise ParseError(str(exc), no) from exc


def read_code(path: str | Path, require_sorted: bool = True) -> ConstantDimensionCode:
    with open(path) as f:
        return parse(f, require_sorted)


def write_code(path: str | Path, code: ConstantDimensionCode, comments: Iterable[str] = ()) -> None:
    with open(path, "w") as f:
        serialize(code, f, comments)


def read_indices(path: str | Path) -> list[int]:
    indices: list[int] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0]
            try:
                indices.extend(int(tok) for tok in line.split())
            except ValueError:
                raise ParseError(f"non-integer index in {line.strip()!r}", lineno) from None
    return indices


def write_indices(path: str | Path, indices: Iterable[int]) -> None:
    with open(path, "w") as f:
        for idx in indices:
            f.write(f"{int(idx)}\n")
