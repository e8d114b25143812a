"""Gabidulin rank-metric codes, lifting, and the graph codes obtained by expurgating them.

A map f on an F_q-subspace D of F_{q^M} is stored as the coefficient row (a_0, a_1, ...) of the
linearized polynomial sum a_i x^(q^i); its graph {(x, f(x)) : x in D} is the row space of
[I | flatten(f(d_1)); ...; flatten(f(d_r))] for an F_q-basis d_1..d_r of D.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from cdc import DEFAULT_SEED, ConstantDimensionCode
from errors import ConstructionBug, EnumerationTooLarge, InvalidSpec, NotPolynomialBacked, ParseError, ShapeMismatch
from gf_core import Field, LinearizedPoly, Tower, field_of_order, make_tower
from subspace_linalg import DEFAULT_CAP, Matrix, Subspace, batch_rref, nullspace, subspace_from_rows


def _lex_order(stack: np.ndarray) -> np.ndarray:
    flat = stack.reshape(len(stack), -1)
    if flat.shape[1] == 0:
        return np.arange(len(stack))
    return np.lexsort(flat.T[::-1])


def _all_coefficients(order: int, count: int) -> np.ndarray:
    index = np.arange(order**count, dtype=np.int64)
    return (index[:, None] // order ** np.arange(count, dtype=np.int64)) % order


def evaluate_maps(tower: Tower, polys: np.ndarray, points: Sequence[int]) -> np.ndarray:
    """f(d) for every coefficient row f in `polys` (N, s) and every point d; shape (N, len(points))."""
    ext = tower.ext
    points = np.asarray(points, dtype=np.int64)
    values = np.zeros((len(polys), len(points)), dtype=np.int64)
    for i in range(polys.shape[1]):
        frob = np.asarray(tower.frobenius(points, i), dtype=np.int64)
        values = ext.add(values, ext.mul(polys[:, i, None], frob[None, :]))
    return values


def map_matrices(tower: Tower, polys: np.ndarray, points: Sequence[int]) -> np.ndarray:
    """Matrices over F_q, row r = coordinates of f(points[r]); shape (N, len(points), M)."""
    return tower.flatten(evaluate_maps(tower, polys, points))


def lifted_bases(mats: np.ndarray) -> np.ndarray:
    n, m, cols = mats.shape
    bases = np.zeros((n, m, m + cols), dtype=np.int64)
    bases[:, :, :m] = np.eye(m, dtype=np.int64)
    bases[:, :, m:] = mats
    bases.setflags(write=False)
    return bases


@dataclass(frozen=True, eq=False)
class RankMetricCode:
    field: Field
    m: int
    n: int
    codewords: np.ndarray
    design_rank_distance: int
    polys: np.ndarray | None = None
    tower: Tower | None = None

    def __len__(self) -> int:
        return len(self.codewords)

    def matrix(self, index: int) -> Matrix:
        return Matrix(self.field, self.codewords[index])

    def rank_weights(self) -> np.ndarray:
        return batch_rref(self.field, self.codewords)[1]


def rank_distance(a: Matrix, b: Matrix) -> int:
    if a.field != b.field or a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} over {a.field} vs {b.shape} over {b.field}")
    return (a - b).rank()


def gabidulin(field: Field, m: int, n: int, d: int, cap: int = DEFAULT_CAP) -> RankMetricCode:
    """All evaluations of sum_{i<=m-d} a_i x^(q^i), a_i in F_{q^n}, on the first m basis elements of F_{q^n}.

    Codewords are sorted lexicographically; `polys[j]` is the coefficient row of codeword j.
    """
    if not 1 <= m <= n:
        raise InvalidSpec(f"need 1 <= m <= n, got m={m} n={n}")
    if d < 1:
        raise InvalidSpec(f"rank distance must be >= 1, got {d}")
    tower = make_tower(field, n)
    if d > m:
        zero = np.zeros((1, m, n), dtype=np.int64)
        return RankMetricCode(field, m, n, zero, d, np.zeros((1, 1), dtype=np.int64), tower)
    size = gabidulin_size(field, m, n, d)
    if size > cap:
        raise EnumerationTooLarge(f"gabidulin code of size {size} exceeds the cap {cap}")
    polys = _all_coefficients(tower.ext.q, m - d + 1)
    mats = map_matrices(tower, polys, tower.basis[:m])
    order = _lex_order(mats)
    mats, polys = mats[order], polys[order]
    mats.setflags(write=False)
    return RankMetricCode(field, m, n, mats, d, polys, tower)


def gabidulin_size(field: Field, m: int, n: int, d: int) -> int:
    return 1 if d > m else field.q ** (n * (m - d + 1))


def sample_gabidulin(
    field: Field, m: int, n: int, d: int, count: int, seed: int = DEFAULT_SEED
) -> RankMetricCode:
    """`count` codewords of gabidulin(field, m, n, d) drawn with the seed, repeats allowed and
    unsorted; for codes too large to enumerate."""
    if not 1 <= m <= n or not 1 <= d <= m:
        raise InvalidSpec(f"need 1 <= d <= m <= n, got m={m} n={n} d={d}")
    tower = make_tower(field, n)
    rng = np.random.default_rng(seed)
    polys = rng.integers(0, tower.ext.q, size=(count, m - d + 1), dtype=np.int64)
    mats = map_matrices(tower, polys, tower.basis[:m])
    mats.setflags(write=False)
    return RankMetricCode(field, m, n, mats, d, polys, tower)


def lift(r: RankMetricCode) -> ConstantDimensionCode:
    """{rowspace [I_m | A] : A in R} in F_q^(m+n), same order as R."""
    v = r.m + r.n
    bases = lifted_bases(np.asarray(r.codewords, dtype=np.int64))
    words = tuple(Subspace(r.field, v, b) for b in bases)
    claimed = 2 * r.design_rank_distance if len(r) > 1 else None
    return ConstantDimensionCode(r.field, v, r.m, words, claimed)


def lifted_mrd(field: Field, v: int, k: int, d_s: int, cap: int = DEFAULT_CAP) -> ConstantDimensionCode:
    """Lifted MRD code of k-spaces in F_q^v with subspace distance d_s; transposed when k > v - k."""
    if d_s < 2 or d_s % 2 or not 1 <= k < v:
        raise InvalidSpec(f"no lifted MRD code for v={v} k={k} d={d_s}")
    if k <= v - k:
        return lift(gabidulin(field, k, v - k, d_s // 2, cap))
    r = gabidulin(field, v - k, k, d_s // 2, cap)
    mats = np.ascontiguousarray(np.swapaxes(r.codewords, 1, 2))
    return lift(RankMetricCode(field, k, v - k, mats, r.design_rank_distance))


@dataclass(frozen=True, eq=False)
class GraphCodebook:
    """Graphs of linearized maps restricted to the F_q-span of `domain` (points of tower.ext)."""

    tower: Tower
    domain: tuple[int, ...]
    polys: np.ndarray

    @property
    def maps(self) -> list[LinearizedPoly]:
        return [LinearizedPoly(self.tower, tuple(int(a) for a in row)) for row in self.polys]

    def __len__(self) -> int:
        return len(self.polys)

    def matrices(self) -> np.ndarray:
        return map_matrices(self.tower, self.polys, self.domain)

    def bases(self) -> np.ndarray:
        return lifted_bases(self.matrices())

    def to_code(self) -> ConstantDimensionCode:
        field, r = self.tower.base, len(self.domain)
        v = r + self.tower.m
        return ConstantDimensionCode(field, v, r, tuple(Subspace(field, v, b) for b in self.bases()))

    def subset(self, indices: Sequence[int]) -> GraphCodebook:
        return GraphCodebook(self.tower, self.domain, self.polys[np.asarray(indices, dtype=np.int64)])


class PolynomialBacked(Protocol):
    polys: np.ndarray | None


def monomial_clique(source: PolynomialBacked) -> list[int]:
    """Indices of the monomial maps a*x; their graphs pairwise meet only in 0."""
    polys = getattr(source, "polys", None)
    if polys is None:
        raise NotPolynomialBacked(f"{type(source).__name__} carries no defining polynomials")
    polys = np.asarray(polys)
    return np.flatnonzero(~polys[:, 1:].any(axis=1)).tolist()


@dataclass(frozen=True, eq=False)
class ExpurgatedCode:
    code: ConstantDimensionCode
    codebook: GraphCodebook
    clique: tuple[int, ...]
    removed_count: int
    special: Subspace

    @property
    def polys(self) -> np.ndarray:
        return self.codebook.polys


def _special_space(field: Field, r: int, m: int) -> Subspace:
    rows = np.zeros((m, r + m), dtype=np.int64)
    rows[:, r:] = np.eye(m, dtype=np.int64)
    return subspace_from_rows(field, r + m, rows)


def _expurgate(codebook: GraphCodebook, removed: np.ndarray, special: Subspace) -> ExpurgatedCode:
    full = codebook.to_code()
    field, v, r = full.field, full.v, full.k
    gone = {Subspace(field, v, b) for b in GraphCodebook(codebook.tower, codebook.domain, removed).bases()}
    keep = [i for i, w in enumerate(full.codewords) if w not in gone]
    if len(full) - len(keep) != len(gone):
        raise ConstructionBug("a removed graph is not a codeword of the base code")
    survivors = codebook.subset(keep)
    code = full.subcode(keep)
    clique = tuple(monomial_clique(survivors))
    return ExpurgatedCode(code, survivors, clique, len(gone), special)


def expurgate6(q: int) -> ExpurgatedCode:
    """Lifted gabidulin(F_q, 3, 3, 2) without the q^3 graphs of u x^q - u^q x."""
    field = field_of_order(q)
    base = gabidulin(field, 3, 3, 2)
    tower = base.tower
    codebook = GraphCodebook(tower, tower.basis, base.polys)
    u = np.arange(tower.ext.q, dtype=np.int64)
    removed = np.stack([tower.ext.neg(tower.frobenius(u)), u], axis=1)
    return _expurgate(codebook, removed, _special_space(field, 3, 3))


def trace_zero_basis(tower: Tower) -> tuple[int, ...]:
    """RREF F_q-basis (as tower.ext elements) of the kernel of the trace."""
    traces = np.asarray(tower.trace(np.asarray(tower.basis, dtype=np.int64)), dtype=np.int64)
    coords = nullspace(tower.base, traces.reshape(tower.m, 1))
    return tuple(int(x) for x in tower.unflatten(coords))


def expurgate7(q: int) -> ExpurgatedCode:
    """Graphs of a_0 x + a_1 x^q on the trace-zero space of F_{q^4}, without r(u x^q - u^q x), r != 0, tr(u) = 1."""
    field = field_of_order(q)
    tower = make_tower(field, 4)
    ext = tower.ext
    domain = trace_zero_basis(tower)
    polys = _all_coefficients(ext.q, 2)
    mats = map_matrices(tower, polys, domain)
    codebook = GraphCodebook(tower, domain, polys[_lex_order(mats)])

    elems = np.arange(ext.q, dtype=np.int64)
    us = elems[np.asarray(tower.trace(elems)) == 1]
    r, u = np.meshgrid(elems[1:], us, indexing="ij")
    r, u = r.ravel(), u.ravel()
    removed = np.stack([ext.neg(ext.mul(r, tower.frobenius(u))), ext.mul(r, u)], axis=1)
    return _expurgate(codebook, removed, _special_space(field, 3, 4))


def write_polys(path: str | Path, polys: np.ndarray) -> None:
    with open(path, "w") as f:
        for row in np.asarray(polys).tolist():
            f.write(" ".join(map(str, row)) + "\n")


def read_polys(path: str | Path) -> np.ndarray:
    rows: list[list[int]] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                rows.append([int(tok) for tok in line.split()])
            except ValueError:
                raise ParseError(f"non-integer coefficient in {line.strip()!r}", lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError("rows of different length", lineno)
    return np.array(rows, dtype=np.int64)
