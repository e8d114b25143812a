"""Augmenting a code with compatible k-spaces: candidates, compatibility graph, clique search."""

from __future__ import annotations

import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from cdc import ConstantDimensionCode
from errors import BadSeed
from subspace_linalg import (
    DEFAULT_CAP,
    PAIR_CHUNK,
    Subspace,
    enumerate_subspaces,
    intersection_dims,
    pair_chunks,
    rank_words,
)

DEFAULT_BUDGET = 300.0


def candidate_planes(
    code: ConstantDimensionCode, max_allowed_intersection: int = 1, cap: int = DEFAULT_CAP, workers: int = 1
) -> list[Subspace]:
    """Every k-space outside the code meeting each codeword in dimension <= max_allowed_intersection."""
    spaces = list(enumerate_subspaces(code.field, code.v, code.k, cap))
    if not spaces:
        return []
    rows = rank_words(code.field, np.stack([s.basis for s in spaces]))
    base = code.rank_rows
    ok = np.ones(len(spaces), dtype=bool)
    step = max(1, PAIR_CHUNK // max(1, len(code)))

    def check(start: int) -> None:
        block = rows[start : start + step]
        left = np.repeat(block, len(code), axis=0)
        right = np.tile(base, (len(block),) + (1,) * (base.ndim - 1))
        dims = intersection_dims(code.field, left, right).reshape(len(block), len(code))
        ok[start : start + step] = (dims <= max_allowed_intersection).all(axis=1)

    if len(code):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            list(pool.map(check, range(0, len(spaces), step)))
    return [s for s, good in zip(spaces, ok) if good and s not in code]


@dataclass(frozen=True, eq=False)
class CompatibilityGraph:
    """Vertices are candidates; bit j of adjacency[i] is set iff candidates i and j are compatible."""

    candidates: tuple[Subspace, ...]
    adjacency: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i] >> j & 1)

    def degree(self, i: int) -> int:
        return self.adjacency[i].bit_count()

    def edges(self) -> Iterator[tuple[int, int]]:
        for i, row in enumerate(self.adjacency):
            for j in _bits(row >> (i + 1)):
                yield i, i + 1 + j


def _bits(word: int) -> Iterator[int]:
    while word:
        low = word & -word
        yield low.bit_length() - 1
        word ^= low


def compatibility_graph(candidates: Sequence[Subspace], max_allowed_intersection: int = 1) -> CompatibilityGraph:
    n = len(candidates)
    matrix = np.zeros((n, n), dtype=bool)
    if n > 1:
        field = candidates[0].field
        rows = rank_words(field, np.stack([c.basis for c in candidates]))
        for first, second in pair_chunks(n):
            ok = intersection_dims(field, rows[first], rows[second]) <= max_allowed_intersection
            matrix[first[ok], second[ok]] = True
        matrix |= matrix.T
    adjacency = tuple(
        int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in matrix
    )
    return CompatibilityGraph(tuple(candidates), adjacency)


@dataclass(frozen=True)
class CliqueResult:
    indices: tuple[int, ...]
    optimal: bool
    nodes: int

    def __len__(self) -> int:
        return len(self.indices)


class _OutOfTime(Exception):
    pass


class _CliqueSearch:
    """Bitset branch and bound; greedy colouring of the candidate set bounds each branch.

    Root branches are numbered in the order a serial search visits them and may run on separate
    threads against one shared incumbent. An equal-size clique from an earlier-numbered branch
    replaces the incumbent, so the answer does not depend on thread timing.
    """

    def __init__(self, adjacency: list[int], deadline: float) -> None:
        self.adj = adjacency
        self.deadline = deadline
        self.best: list[int] = []
        self.holder = -1
        self.nodes = 0
        self._lock = threading.Lock()

    def colour_sort(self, p: int) -> tuple[list[int], list[int]]:
        order: list[int] = []
        bounds: list[int] = []
        colour = 0
        while p:
            colour += 1
            q = p
            while q:
                low = q & -q
                v = low.bit_length() - 1
                q &= ~self.adj[v] & ~low
                p &= ~low
                order.append(v)
                bounds.append(colour)
        return order, bounds

    def beats(self, size: int, branch: int) -> bool:
        best = len(self.best)
        return size > best or (size == best and branch < self.holder)

    def offer(self, r: list[int], branch: int) -> None:
        with self._lock:
            if self.beats(len(r), branch):
                self.best = list(r)
                self.holder = branch

    def branches(self, r: list[int], p: int) -> list[tuple[int, int, int, int]]:
        """(branch, colour bound, vertex, candidates) for each root branch, in serial order."""
        order, bounds = self.colour_sort(p)
        roots = []
        for idx in range(len(order) - 1, -1, -1):
            v = order[idx]
            roots.append((len(roots), len(r) + bounds[idx], v, p & self.adj[v]))
            p &= ~(1 << v)
        return roots

    def run_branch(self, r: list[int], root: tuple[int, int, int, int]) -> int:
        branch, bound, v, sub = root
        nodes = [0]
        if self.beats(bound, branch):
            r = r + [v]
            if sub:
                self.expand(r, sub, branch, nodes)
            else:
                self.offer(r, branch)
        return nodes[0]

    def expand(self, r: list[int], p: int, branch: int, nodes: list[int]) -> None:
        nodes[0] += 1
        if nodes[0] & 0x3FF == 0 and time.monotonic() > self.deadline:
            raise _OutOfTime
        order, bounds = self.colour_sort(p)
        for idx in range(len(order) - 1, -1, -1):
            if not self.beats(len(r) + bounds[idx], branch):
                return
            v = order[idx]
            r.append(v)
            sub = p & self.adj[v]
            if sub:
                self.expand(r, sub, branch, nodes)
            elif self.beats(len(r), branch):
                self.offer(r, branch)
            r.pop()
            p &= ~(1 << v)


def exact_max_clique(
    graph: CompatibilityGraph,
    force_include: Sequence[int] = (),
    time_budget: float = DEFAULT_BUDGET,
    workers: int = 1,
) -> CliqueResult:
    """Maximum clique containing force_include; optimal=False when the budget ran out first.

    Root branches are shared among `workers` threads; the clique returned is the one a single
    thread would find.
    """
    n = len(graph)
    forced = sorted(set(int(i) for i in force_include))
    if any(not 0 <= i < n for i in forced):
        raise BadSeed(f"force_include {forced} has indices outside 0..{n - 1}")
    if any(not graph.has_edge(a, b) for pos, a in enumerate(forced) for b in forced[pos + 1 :]):
        raise BadSeed(f"force_include {forced} is not a clique")

    # relabel by descending degree
    rank = sorted(range(n), key=lambda i: (-graph.degree(i), i))
    new_of = {old: new for new, old in enumerate(rank)}
    adj = [0] * n
    for old, row in enumerate(graph.adjacency):
        adj[new_of[old]] = sum(1 << new_of[j] for j in _bits(row))

    p = (1 << n) - 1
    for f in forced:
        p &= adj[new_of[f]]
    search = _CliqueSearch(adj, time.monotonic() + time_budget)
    base = [new_of[f] for f in forced]
    search.best = base + _greedy_extend(adj, p)
    optimal = True
    if p:
        sys.setrecursionlimit(max(sys.getrecursionlimit(), n + 100))
        roots = search.branches(base, p)
        search.nodes = 1
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = [pool.submit(search.run_branch, base, root) for root in roots]
            for future in futures:
                try:
                    search.nodes += future.result()
                except _OutOfTime:
                    optimal = False
    indices = tuple(sorted(rank[v] for v in search.best))
    return CliqueResult(indices, optimal, search.nodes)


def _greedy_extend(adj: list[int], p: int) -> list[int]:
    chosen: list[int] = []
    while p:
        v = max(_bits(p), key=lambda u: ((adj[u] & p).bit_count(), -u))
        chosen.append(v)
        p &= adj[v]
    return chosen


@dataclass(frozen=True, eq=False)
class AugmentResult:
    code: ConstantDimensionCode
    base_size: int
    added: int
    optimal: bool
    seed: int | None = None

    def audit_line(self) -> str:
        seed = "none" if self.seed is None else str(self.seed)
        return f"augmented: base={self.base_size} added={self.added} optimal={str(self.optimal).lower()} seed={seed}"


def greedy_augment(
    code: ConstantDimensionCode, restarts: int = 100, seed: int = 1, cap: int = DEFAULT_CAP, workers: int = 1
) -> AugmentResult:
    """Best of `restarts` greedy passes: take the candidate with most compatible remaining candidates,
    ties broken by a seeded shuffled order."""
    candidates = candidate_planes(code, cap=cap, workers=workers)
    graph = compatibility_graph(candidates)
    n = len(graph)
    rng = np.random.default_rng(seed)
    best: list[int] = []
    for _ in range(max(1, restarts)):
        position = rng.permutation(n).tolist()
        p = (1 << n) - 1
        chosen: list[int] = []
        while p:
            v = max(_bits(p), key=lambda u: ((graph.adjacency[u] & p).bit_count(), -position[u]))
            chosen.append(v)
            p &= graph.adjacency[v]
        if len(chosen) > len(best):
            best = chosen
    added = tuple(candidates[i] for i in sorted(best))
    return AugmentResult(code.extended(added), len(code), len(added), False, seed)


def exact_augment(
    code: ConstantDimensionCode,
    force_include: Sequence[Subspace] = (),
    time_budget: float = DEFAULT_BUDGET,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> AugmentResult:
    candidates = candidate_planes(code, cap=cap, workers=workers)
    position = {c: i for i, c in enumerate(candidates)}
    missing = [s for s in force_include if s not in position]
    if missing:
        raise BadSeed(f"{len(missing)} forced space(s) are not compatible candidates, first {missing[0]!r}")
    graph = compatibility_graph(candidates)
    result = exact_max_clique(graph, [position[s] for s in force_include], time_budget, workers)
    added = tuple(candidates[i] for i in result.indices)
    return AugmentResult(code.extended(added), len(code), len(added), result.optimal)
