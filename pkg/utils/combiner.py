"""Combining two constant dimension codes along a special subspace, the recursive series built from
it, and the catalog of parametric lower bounds the constructions are measured against.

Output ambient space is F_q^(v1 + v2 - k): C1 lives in the first v1 coordinates and the special
space S is spanned by the last v2 - k unit vectors. Every U in C1 gets a copy of a code in
K = <U, S>: an image of C2 (for U in the clique) or a lifted MRD code of graphs U -> S.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from cdc import ConstantDimensionCode, is_clique, read_code, read_indices
from errors import (
    BadSpecialSpace,
    ConstructionBug,
    InvalidSpec,
    MissingBase,
    NoAnchor,
    NotSDisjoint,
    UnknownBound,
)
from mrd import expurgate6, gabidulin, monomial_clique
from search import DEFAULT_BUDGET, compatibility_graph, exact_augment, exact_max_clique
from subspace_linalg import (
    DEFAULT_CAP,
    Matrix,
    Subspace,
    batch_rref,
    direct_sum_map,
    intersection_dims,
    matmul,
    rank_words,
)

LITERAL = "literal"
BEST_PER_CODEWORD = "best-per-codeword"
STRATEGIES = (LITERAL, BEST_PER_CODEWORD)
C2_COPY = "c2"
MRD_COPY = "mrd"
_CHUNK = 1 << 16
RESERVE_LIMIT = 8


@dataclass(frozen=True, eq=False)
class CombineSpec:
    c1: ConstantDimensionCode
    clique1: tuple[int, ...]
    c2: ConstantDimensionCode
    s_prime: Subspace
    strategy: str = LITERAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "clique1", tuple(int(i) for i in self.clique1))


@dataclass(frozen=True, eq=False)
class CombineReport:
    spec: CombineSpec
    lambda_: int
    w0_index: int
    planted: tuple[int, ...]
    predicted: int
    actual: int
    per_copy_sizes: dict[int, int]
    copy_types: dict[int, str]
    output: ConstantDimensionCode
    provenance: np.ndarray
    copy_index: dict[int, np.ndarray]
    origin: np.ndarray
    monomials: tuple[int, ...] = ()
    lifted_clique: tuple[int, ...] | None = None


def predicted_size(n1: int, n1c: int, n2: int, q: int, v2: int, k: int, lambda_: int) -> int:
    if not 0 <= n1c <= n1 or not 0 <= lambda_ <= n2 or v2 < 2 * k:
        raise InvalidSpec(f"no combination for n1={n1} n1c={n1c} n2={n2} v2={v2} k={k} lambda={lambda_}")
    mrd = q ** (2 * (v2 - k))
    return n1 * mrd + n1c * (n2 - mrd - lambda_) + lambda_


def special_dims(code: ConstantDimensionCode, s: Subspace) -> np.ndarray:
    """dim(X ∩ S) for every codeword X."""
    s_rows = rank_words(code.field, s.basis[None])
    return intersection_dims(code.field, code.rank_rows, np.repeat(s_rows, len(code), axis=0))


def _validate(spec: CombineSpec) -> tuple[np.ndarray, int]:
    c1, c2, s = spec.c1, spec.c2, spec.s_prime
    if spec.strategy not in STRATEGIES:
        raise InvalidSpec(f"unknown strategy {spec.strategy!r}, expected one of {STRATEGIES}")
    if c1.field != c2.field or c1.k != c2.k:
        raise InvalidSpec(f"{c1!r} and {c2!r} do not share q and k")
    k = c1.k
    if k < 2:
        raise InvalidSpec("combining needs k >= 2")
    if c2.v < 2 * k:
        raise InvalidSpec(f"v2={c2.v} must be at least 2k={2 * k}")
    if not len(c1) or not len(c2):
        raise InvalidSpec("both codes need at least one codeword")
    if s.field != c2.field or s.v != c2.v or s.k != c2.v - k:
        raise InvalidSpec(f"S' must be a {c2.v - k}-space of F_q^{c2.v}, got {s!r}")
    if len(set(spec.clique1)) != len(spec.clique1) or any(not 0 <= i < len(c1) for i in spec.clique1):
        raise InvalidSpec("clique1 must hold distinct indices into C1")
    if not is_clique(c1, spec.clique1):
        raise InvalidSpec("clique1 is not a set of pairwise disjoint codewords")

    dims = special_dims(c2, s)
    bad = np.flatnonzero((dims > 1) & (dims < k))
    if len(bad):
        raise BadSpecialSpace(f"codeword {int(bad[0])} of C2 meets S' in dimension {int(dims[bad[0]])}")
    disjoint = np.flatnonzero(dims == 0).tolist()
    if not disjoint:
        raise NoAnchor("no codeword of C2 is disjoint from S'")
    w0 = min(disjoint, key=lambda i: c2[i])
    return dims, w0


def _embed(u: Subspace, v: int, offset: int = 0) -> Subspace:
    basis = np.zeros((u.k, v), dtype=np.int64)
    basis[:, offset : offset + u.v] = u.basis
    return Subspace(u.field, v, basis)


def _chunks(items: Sequence[int], size: int) -> Iterator[list[int]]:
    for start in range(0, len(items), max(1, size)):
        yield list(items[start : start + max(1, size)])


def combine(spec: CombineSpec, clique2: Sequence[int] | None = None) -> CombineReport:
    """Build the combined code; with `clique2` the report also carries the lifted clique."""
    dims, w0 = _validate(spec)
    c1, c2 = spec.c1, spec.c2
    field, k = c1.field, c1.k
    s_dim = c2.v - k
    v = c1.v + s_dim
    s_target = _embed(Subspace(field, s_dim, np.eye(s_dim, dtype=np.int64)), v, offset=c1.v)

    planted = np.flatnonzero(dims == k)
    keep = np.flatnonzero(dims != k)
    mrd_size = field.q ** (2 * s_dim)
    clique = set(spec.clique1)
    use_c2 = spec.strategy == LITERAL or len(keep) >= mrd_size
    c2_us = [u for u in range(len(c1)) if u in clique and use_c2]
    mrd_us = [u for u in range(len(c1)) if not (u in clique and use_c2)]

    stacks: list[np.ndarray] = []
    owners: list[np.ndarray] = []
    origins: list[np.ndarray] = []
    per_copy_sizes: dict[int, int] = {}
    copy_types: dict[int, str] = {}

    def embedding(u: int) -> Matrix:
        return direct_sum_map(c2[w0], spec.s_prime, _embed(c1[u], v), s_target)

    kept_stack = c2.stack[keep]
    for u in c2_us:
        images = batch_rref(field, matmul(field, kept_stack, embedding(u).entries))[0]
        stacks.append(images)
        owners.append(np.full(len(keep), u, dtype=np.int64))
        origins.append(keep)
        per_copy_sizes[u], copy_types[u] = len(keep), C2_COPY

    monomials: list[int] = []
    if mrd_us:
        rank_code = gabidulin(field, k, s_dim, k - 1)
        graphs = np.asarray(rank_code.codewords, dtype=np.int64)
        monomials = monomial_clique(rank_code)
        for chunk in _chunks(mrd_us, _CHUNK // mrd_size):
            us = c1.stack[chunk]
            block = np.concatenate(
                [
                    np.broadcast_to(us[:, None], (len(chunk), mrd_size, k, c1.v)),
                    np.broadcast_to(graphs[None], (len(chunk), mrd_size, k, s_dim)),
                ],
                axis=-1,
            ).reshape(-1, k, v)
            stacks.append(block)
            owners.append(np.repeat(np.asarray(chunk, dtype=np.int64), mrd_size))
            origins.append(np.tile(np.arange(mrd_size, dtype=np.int64), len(chunk)))
        for u in mrd_us:
            per_copy_sizes[u], copy_types[u] = mrd_size, MRD_COPY

    if len(planted):
        stacks.append(batch_rref(field, matmul(field, c2.stack[planted], embedding(0).entries))[0])
        owners.append(np.full(len(planted), -1, dtype=np.int64))
        origins.append(planted)

    stack = np.concatenate(stacks)
    flat = stack.reshape(len(stack), -1)
    order = np.lexsort(flat.T[::-1])
    stack, flat = stack[order], flat[order]
    owner, origin = np.concatenate(owners)[order], np.concatenate(origins)[order]
    dup = np.flatnonzero((flat[1:] == flat[:-1]).all(axis=1))
    if len(dup):
        i = int(dup[0])
        raise ConstructionBug(f"output codewords {i} and {i + 1} coincide (copies of U={owner[i]} and U={owner[i + 1]})")
    stack.setflags(write=False)
    owner.setflags(write=False)
    origin.setflags(write=False)
    output = ConstantDimensionCode(field, v, k, tuple(Subspace(field, v, b) for b in stack), 2 * k - 2)

    copy_index = {u: np.full(len(c2), -1, dtype=np.int64) for u in c2_us}
    for pos in np.flatnonzero(np.isin(owner, c2_us)).tolist():
        copy_index[int(owner[pos])][origin[pos]] = pos

    n1c = len(c2_us)
    predicted = predicted_size(len(c1), n1c, len(c2), field.q, c2.v, k, len(planted))
    if len(output) != predicted:
        raise ConstructionBug(f"built {len(output)} codewords, expected {predicted}")

    report = CombineReport(
        spec=spec,
        lambda_=len(planted),
        w0_index=w0,
        planted=tuple(planted.tolist()),
        predicted=predicted,
        actual=len(output),
        per_copy_sizes=per_copy_sizes,
        copy_types=copy_types,
        output=output,
        provenance=owner,
        copy_index=copy_index,
        origin=origin,
        monomials=tuple(monomials),
    )
    if clique2 is not None:
        report = dataclasses.replace(report, lifted_clique=tuple(lift_clique(report, clique2)))
    return report


def lift_clique(
    report: CombineReport, clique2: Sequence[int] = (), outer: Sequence[int] | None = None
) -> list[int]:
    """Pairwise disjoint output codewords over the pairwise disjoint C1 codewords `outer`
    (default clique1): the images of clique2 in every C2-copy and the monomial graphs in every
    MRD copy. All of them avoid S, and distinct copies share only S."""
    spec = report.spec
    c1, c2 = spec.c1, spec.c2
    outer = spec.clique1 if outer is None else tuple(int(u) for u in outer)
    if any(not 0 <= u < len(c1) for u in outer) or not is_clique(c1, outer):
        raise InvalidSpec("outer must be a clique of C1")
    clique2 = [int(i) for i in clique2]
    if any(not 0 <= i < len(c2) for i in clique2) or not is_clique(c2, clique2):
        raise InvalidSpec("clique2 must be a clique of C2")

    c2_us = [u for u in outer if report.copy_types[u] == C2_COPY]
    mrd_us = [u for u in outer if report.copy_types[u] == MRD_COPY]
    lifted: list[int] = []
    if c2_us and clique2:
        dims = special_dims(c2, spec.s_prime)
        touching = [i for i in clique2 if dims[i]]
        if touching:
            raise NotSDisjoint(f"codeword {touching[0]} of clique2 meets S'")
        for u in c2_us:
            lifted.extend(report.copy_index[u][clique2].tolist())
    if mrd_us:
        graphs = np.isin(report.provenance, mrd_us) & np.isin(report.origin, report.monomials)
        lifted.extend(np.flatnonzero(graphs).tolist())
    return sorted(lifted)


def _admissible(code: ConstantDimensionCode, idx: int) -> np.ndarray | None:
    """dim(X ∩ code[idx]) for every codeword when code[idx] can serve as S', else None."""
    dims = special_dims(code, code[idx])
    others = np.delete(dims, idx)
    if np.any((others > 1) & (others < code.k)) or not np.any(others == 0):
        return None
    return dims


def admissible_special_spaces(code: ConstantDimensionCode) -> Iterator[int]:
    """Codewords (canonical order) admissible as S' with a disjoint partner."""
    if code.v != 2 * code.k:
        raise InvalidSpec("a codeword can only serve as S' when v = 2k")
    for idx in code.canonical_order().tolist():
        if _admissible(code, idx) is not None:
            yield idx


def select_special_space(code: ConstantDimensionCode, clique: Sequence[int] = ()) -> int:
    """Smallest codeword (canonical order) admissible as S' with a disjoint partner and meeting no
    clique member."""
    avoid = set(int(i) for i in clique)
    for idx in admissible_special_spaces(code):
        if idx in avoid:
            continue
        dims = special_dims(code, code[idx])
        if any(dims[i] for i in avoid):
            continue
        return idx
    raise NoAnchor("no codeword is admissible as S'")


def max_disjoint_subset(
    code: ConstantDimensionCode, indices: Sequence[int], time_budget: float = DEFAULT_BUDGET
) -> tuple[int, ...]:
    """Largest clique of `code` inside `indices`."""
    indices = [int(i) for i in indices]
    if not indices:
        return ()
    graph = compatibility_graph([code[i] for i in indices], max_allowed_intersection=0)
    result = exact_max_clique(graph, time_budget=time_budget)
    return tuple(sorted(indices[j] for j in result.indices))


def anchored_clique(
    code: ConstantDimensionCode, s_prime_index: int, time_budget: float = DEFAULT_BUDGET
) -> tuple[int, ...]:
    """Largest clique of codewords disjoint from code[s_prime_index]."""
    dims = special_dims(code, code[s_prime_index])
    return max_disjoint_subset(code, np.flatnonzero(dims == 0).tolist(), time_budget)


def select_anchor(
    code: ConstantDimensionCode, size: int, time_budget: float = DEFAULT_BUDGET
) -> tuple[int, tuple[int, ...]]:
    """S' and a clique of `size` codewords disjoint from it, searched jointly in canonical order.

    Without such a pair the first admissible S' comes back with its largest disjoint clique.
    """
    fallback: tuple[int, tuple[int, ...]] | None = None
    for idx in admissible_special_spaces(code):
        anchored = anchored_clique(code, idx, time_budget)
        if len(anchored) >= size:
            return idx, anchored[:size]
        if fallback is None:
            fallback = idx, anchored
    if fallback is None:
        raise NoAnchor("no codeword is admissible as S'")
    return fallback


def reserve_cliques(
    code: ConstantDimensionCode,
    avoid: Sequence[int],
    limit: int = RESERVE_LIMIT,
    time_budget: float = DEFAULT_BUDGET,
) -> tuple[tuple[int, ...], ...]:
    """Up to `limit` pairwise index-disjoint cliques of `code` avoiding `avoid`, each a maximum
    clique of what the earlier ones left."""
    taken = set(int(i) for i in avoid)
    reserves: list[tuple[int, ...]] = []
    while len(reserves) < limit:
        found = max_disjoint_subset(code, [i for i in range(len(code)) if i not in taken], time_budget)
        if not found:
            break
        reserves.append(found)
        taken.update(found)
    return tuple(reserves)


@dataclass(frozen=True, eq=False)
class SeriesBase:
    """The code the series combines with at every step.

    `clique` seeds the series; `anchored` is a clique of codewords disjoint from S' whose images
    grow the clique through C2-copies; `reserves` are cliques index-disjoint from `clique` whose
    monomial graphs grow it through MRD copies when `anchored` falls short.
    """

    code: ConstantDimensionCode
    clique: tuple[int, ...]
    s_prime_index: int
    optimal: bool = True
    anchored: tuple[int, ...] = ()
    reserves: tuple[tuple[int, ...], ...] = ()

    @property
    def s_prime(self) -> Subspace:
        return self.code[self.s_prime_index]


def anchor_base(
    code: ConstantDimensionCode,
    clique: Sequence[int],
    s_prime_index: int | None = None,
    optimal: bool = True,
    time_budget: float = DEFAULT_BUDGET,
) -> SeriesBase:
    clique = tuple(sorted(int(i) for i in clique))
    if s_prime_index is None:
        s_prime_index, anchored = select_anchor(code, len(clique), time_budget)
    else:
        anchored = anchored_clique(code, s_prime_index, time_budget)[: len(clique)]
    reserves = reserve_cliques(code, clique, time_budget=time_budget)
    return SeriesBase(code, clique, s_prime_index, optimal, anchored, reserves)


def _grow_clique(
    report: CombineReport, anchored: Sequence[int], reserves: Sequence[Sequence[int]], target: int
) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    """The next clique (truncated to `target`) and the lifted reserves left over.

    The images of `anchored` over clique1 win when they reach `target`; otherwise the smallest
    lifted reserve that does, otherwise the largest option.
    """
    direct = lift_clique(report, anchored)
    lifted = [lift_clique(report, outer=r) for r in reserves]
    pick: int | None = None
    if len(direct) < target:
        fits = [i for i, r in enumerate(lifted) if len(r) >= target]
        if fits:
            pick = min(fits, key=lambda i: (len(lifted[i]), i))
        elif lifted and max(map(len, lifted)) > len(direct):
            pick = max(range(len(lifted)), key=lambda i: (len(lifted[i]), -i))
    chosen = direct if pick is None else lifted[pick]
    rest = [tuple(r) for i, r in enumerate(lifted) if i != pick]
    return tuple(chosen[:target]), rest


def iterate_series(t: int, base: SeriesBase, strategy: str = LITERAL) -> Iterator[CombineReport]:
    """C^(i+1) = combine(C^(i), K^(i), base, S') with K^(0) = base.clique and |K^(i)| = c^(i+1),
    c = |base.clique|, for as long as the anchored images or the reserves reach that size."""
    if t < 0:
        raise InvalidSpec(f"t must be >= 0, got {t}")
    code, clique, reserves = base.code, base.clique, list(base.reserves)
    c = len(base.clique)
    for step in range(1, t + 1):
        report = combine(CombineSpec(code, clique, base.code, base.s_prime, strategy))
        clique, reserves = _grow_clique(report, base.anchored, reserves, c ** (step + 1))
        report = dataclasses.replace(report, lifted_clique=clique)
        yield report
        code = report.output


def series(t: int, base: SeriesBase) -> ConstantDimensionCode:
    code = base.code
    for report in iterate_series(t, base):
        code = report.output
    return code


def series_size_formula(t: int, q: int, base_size: int | None = None, clique_size: int | None = None) -> int:
    if t < 0:
        raise InvalidSpec(f"t must be >= 0, got {t}")
    q6 = q**6
    if base_size is None and clique_size is None:
        total = (q6 + 2 * q**2 + 2 * q + 1) * q ** (6 * t) + (q ** (6 * t) - 1) // (q6 - 1)
        return total + sum((2 * q**2 + 2 * q) * (q**3 - 1) ** i * q ** (6 * (t - i)) for i in range(1, t + 1))
    n2 = q6 + 2 * q**2 + 2 * q + 1 if base_size is None else base_size
    c = q**3 - 1 if clique_size is None else clique_size
    size = n2
    for i in range(1, t + 1):
        size = predicted_size(size, c**i, n2, q, 6, 3, 1)
    return size


def build_series_base(
    q: int, time_budget: float = DEFAULT_BUDGET, cap: int = DEFAULT_CAP, workers: int = 1
) -> SeriesBase:
    """expurgate6(q) completed by an unrestricted exact clique search, seeded with the monomial
    clique and anchored by select_anchor."""
    exp = expurgate6(q)
    result = exact_augment(exp.code, time_budget=time_budget, cap=cap, workers=workers)
    code = result.code.sorted()
    clique = [code.index_of(exp.code[i]) for i in exp.clique]
    return anchor_base(code, clique, optimal=result.optimal, time_budget=time_budget)


def load_series_base(
    code_path: str | Path,
    clique_path: str | Path,
    s_prime_index: int | None = None,
    time_budget: float = DEFAULT_BUDGET,
) -> SeriesBase:
    return anchor_base(read_code(code_path), read_indices(clique_path), s_prime_index, time_budget=time_budget)


def corollary_943(q: int, base: SeriesBase | None = None, time_budget: float = DEFAULT_BUDGET) -> CombineReport:
    """Combine the (6,4;3) base with itself along S' (one planted codeword), carrying a clique of
    c^2 codewords."""
    if base is None:
        if q != 2:
            raise MissingBase(f"no (6,4;3) base code for q={q}; import one from file")
        base = build_series_base(q, time_budget)
    return next(iterate_series(1, base))


@dataclass(frozen=True)
class Bound:
    name: str
    v: int
    d: int
    k: int
    terms: tuple[tuple[int, int], ...]

    def value(self, q: int) -> int:
        return sum(c * q**e for c, e in self.terms)

    @property
    def polynomial(self) -> str:
        out = ""
        for c, e in sorted(self.terms, key=lambda term: -term[1]):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            mono = "" if e == 0 else ("q" if e == 1 else f"q^{e}")
            coef = str(mag) if mag != 1 or not mono else ""
            out += f"{sign}{coef}{mono}"
        return out.lstrip("+")


def _bound(name: str, v: int, d: int, k: int, *terms: tuple[int, int]) -> Bound:
    return Bound(name, v, d, k, terms)


BOUNDS: dict[str, Bound] = {
    b.name: b
    for b in (
        _bound("corollary-9-4-3", 9, 4, 3, (1, 12), (2, 8), (2, 7), (1, 6), (2, 5), (2, 4), (-2, 2), (-2, 1), (1, 0)),
        _bound("prior-9-4-3", 9, 4, 3, (1, 12), (2, 8), (2, 7), (1, 6), (1, 5), (1, 4), (1, 0)),
        _bound(
            "ineq-10-4-3-first", 10, 4, 3,
            (1, 14), (2, 10), (2, 9), (2, 8), (1, 7), (-1, 5), (-2, 4), (-1, 3), (1, 1), (1, 0),
        ),
        _bound(
            "ineq-11-4-3-first", 11, 4, 3,
            (1, 16), (1, 12), (1, 11), (2, 10), (2, 9), (2, 8), (2, 7), (2, 6), (1, 0),
        ),
        _bound("ineq-10-4-3-second", 10, 4, 3, (1, 14), (1, 11), (1, 10), (1, 8), (-1, 7), (2, 6), (2, 5), (1, 0)),
        _bound("ineq-11-4-3-second", 11, 4, 3, (1, 16), (1, 13), (1, 12), (1, 10), (1, 8), (-1, 5), (-1, 4)),
        _bound("base-6-4-3", 6, 4, 3, (1, 6), (2, 2), (2, 1), (1, 0)),
        _bound("base-7-4-3-first", 7, 4, 3, (1, 8), (1, 5), (1, 4), (1, 2), (-1, 1)),
        _bound("base-7-4-3-second", 7, 4, 3, (1, 8), (1, 5), (1, 4), (-1, 1), (-1, 0)),
        _bound("linkage-8-4-3", 8, 4, 3, (1, 10), (1, 6), (1, 5), (2, 4), (2, 3), (2, 2), (1, 1), (1, 0)),
        _bound("spread-6-6-3", 6, 6, 3, (1, 3), (1, 0)),
    )
}
SERIES = "series"


def bound_names() -> list[str]:
    return [*BOUNDS, SERIES]


def bound_triple(name: str, t: int | None = None) -> tuple[int, int, int]:
    if name == SERIES:
        if t is None:
            raise InvalidSpec("the series bound needs t")
        return 6 + 3 * t, 4, 3
    if name not in BOUNDS:
        raise UnknownBound(f"unknown bound {name!r}; known: {', '.join(bound_names())}")
    b = BOUNDS[name]
    return b.v, b.d, b.k


def bound_value(name: str, q: int, t: int | None = None) -> int:
    if name == SERIES:
        if t is None:
            raise InvalidSpec("the series bound needs t")
        return series_size_formula(t, q)
    if name not in BOUNDS:
        raise UnknownBound(f"unknown bound {name!r}; known: {', '.join(bound_names())}")
    return BOUNDS[name].value(q)


def bounds_for(v: int, d: int, k: int) -> list[Bound]:
    return [b for b in BOUNDS.values() if (b.v, b.d, b.k) == (v, d, k)]
