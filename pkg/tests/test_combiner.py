import numpy as np
import pytest

from cdc import ByCopies, ConstantDimensionCode, is_clique, verify
from combiner import (
    BEST_PER_CODEWORD,
    BOUNDS,
    MRD_COPY,
    SERIES,
    CombineSpec,
    SeriesBase,
    anchor_base,
    anchored_clique,
    bound_triple,
    bound_value,
    bounds_for,
    build_series_base,
    combine,
    corollary_943,
    iterate_series,
    lift_clique,
    predicted_size,
    reserve_cliques,
    select_anchor,
    select_special_space,
    series,
    series_size_formula,
)
from errors import InvalidSpec, MissingBase, NoAnchor, NotSDisjoint, UnknownBound
from gf_core import make_field
from mrd import gabidulin, lift, monomial_clique
from subspace_linalg import Subspace

F2 = make_field(2)

DISPLAYED = {
    "corollary-9-4-3": [1, 0, 0, 0, 2, 2, 1, 2, 2, 0, -2, -2, 1],
    "prior-9-4-3": [1, 0, 0, 0, 2, 2, 1, 1, 1, 0, 0, 0, 1],
    "ineq-10-4-3-first": [1, 0, 0, 0, 2, 2, 2, 1, 0, -1, -2, -1, 0, 1, 1],
    "ineq-11-4-3-first": [1, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 0, 0, 0, 0, 0, 1],
    "ineq-10-4-3-second": [1, 0, 0, 1, 1, 0, 1, -1, 2, 2, 0, 0, 0, 0, 1],
    "ineq-11-4-3-second": [1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, -1, -1, 0, 0, 0, 0],
}


def horner(coefficients, q):
    value = 0
    for c in coefficients:
        value = value * q + c
    return value


def whole_plane(field):
    return ConstantDimensionCode(field, 2, 2, (Subspace(field, 2, np.eye(2, dtype=np.int64)),))


def test_predicted_size():
    assert predicted_size(77, 7, 77, 2, 6, 3, 1) == 5013
    assert predicted_size(1024, 32, 77, 2, 6, 3, 1) == 65921
    assert predicted_size(64, 0, 77, 2, 6, 3, 0) == 4096
    with pytest.raises(InvalidSpec):
        predicted_size(4, 5, 5, 2, 4, 2, 1)


@pytest.mark.parametrize("name", sorted(DISPLAYED))
@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_bound_catalog_matches_horner(name, q):
    assert bound_value(name, q) == horner(DISPLAYED[name], q)


def test_bound_values():
    assert bound_value("corollary-9-4-3", 2) == 5013
    assert bound_value("prior-9-4-3", 2) == 4977
    assert bound_value("ineq-11-4-3-second", 2) == 79056
    assert bound_value("base-6-4-3", 2) == 77
    assert bound_value("spread-6-6-3", 2) == 9
    assert bound_value(SERIES, 2, t=2) == 321421
    assert bound_triple(SERIES, 2) == (12, 4, 3)
    assert BOUNDS["corollary-9-4-3"].polynomial == "q^12+2q^8+2q^7+q^6+2q^5+2q^4-2q^2-2q+1"
    assert [b.name for b in bounds_for(9, 4, 3)] == ["corollary-9-4-3", "prior-9-4-3"]
    with pytest.raises(UnknownBound):
        bound_value("nope", 2)
    with pytest.raises(InvalidSpec):
        bound_triple(SERIES)


@pytest.mark.parametrize("q", [2, 3, 4, 5, 7, 8, 9, 11, 13])
def test_series_at_one_step_is_the_corollary_polynomial(q):
    assert series_size_formula(1, q) == bound_value("corollary-9-4-3", q)
    assert series_size_formula(2, q) == series_size_formula(2, q, q**6 + 2 * q**2 + 2 * q + 1, q**3 - 1)
    assert series_size_formula(0, q) == q**6 + 2 * q**2 + 2 * q + 1


def test_combine_spreads(spread4, spread5):
    spec = CombineSpec(spread4, range(4), spread5, spread5[0])
    report = combine(spec, clique2=[1, 2, 3, 4])
    assert report.lambda_ == 1
    assert report.w0_index == 1
    assert report.planted == (0,)
    assert report.predicted == report.actual == 17
    assert report.per_copy_sizes == {0: 4, 1: 4, 2: 4, 3: 4}
    assert report.output.v == 6
    assert verify(report.output, 1).min_distance == 4
    assert len(report.lifted_clique) == 16
    assert is_clique(report.output, report.lifted_clique)


def test_single_codeword_c1_reproduces_c2(spread5):
    report = combine(CombineSpec(whole_plane(F2), [0], spread5, spread5[0]))
    assert report.actual == 5
    assert verify(report.output, 1).distance_histogram == verify(spread5, 1).distance_histogram


def test_empty_clique_uses_mrd_copies(spread4, spread5):
    report = combine(CombineSpec(spread4, [], spread5, spread5[0]))
    assert report.actual == 4 * 16 + 1
    assert set(report.copy_types.values()) == {MRD_COPY}
    assert verify(report.output, 1).passed
    best = combine(CombineSpec(spread4, range(4), spread5, spread5[0], BEST_PER_CODEWORD))
    assert best.actual == best.predicted == 65


def test_combine_preconditions(spread4, spread5):
    with pytest.raises(InvalidSpec):
        combine(CombineSpec(spread4, range(4), spread5, spread5[0], "sideways"))
    with pytest.raises(InvalidSpec):
        combine(CombineSpec(spread4, range(4), spread5, Subspace(F2, 4, np.eye(4, dtype=np.int64)[:1])))
    lonely = spread5.subcode([0])
    with pytest.raises(NoAnchor):
        combine(CombineSpec(spread4, range(4), lonely, lonely[0]))


def test_lift_clique(spread4, spread5):
    report = combine(CombineSpec(spread4, [0, 2], spread5, spread5[0]))
    assert len(lift_clique(report, [1, 3])) == 4
    assert lift_clique(report, [1]) == sorted(lift_clique(report, [1]))
    with pytest.raises(NotSDisjoint):
        lift_clique(report, [0, 1])
    assert lift_clique(combine(CombineSpec(spread4, [], spread5, spread5[0])), [1]) == []
    best = combine(CombineSpec(spread4, range(4), spread5, spread5[0], BEST_PER_CODEWORD))
    graphs = lift_clique(best, [1])
    assert len(graphs) == 4 * 4 and is_clique(best.output, graphs)
    mixed = lift_clique(report, [1, 3], outer=[0, 1])
    assert len(mixed) == 2 + 4 and is_clique(report.output, mixed)
    assert len(lift_clique(report, outer=[1, 3])) == 8
    with pytest.raises(InvalidSpec):
        lift_clique(report, outer=[5])


def test_select_special_space(spread5):
    assert select_special_space(spread5) == 0
    assert select_special_space(spread5, clique=[0]) == 1
    with pytest.raises(InvalidSpec):
        select_special_space(ConstantDimensionCode(F2, 5, 2, ()))


def test_series_over_a_small_base(spread5):
    base = SeriesBase(spread5, (1, 2, 3, 4), 0, anchored=(1, 2, 3, 4))
    reports = list(iterate_series(2, base))
    assert [r.actual for r in reports] == [33, 33 * 16 - 4**2 * 12 + 1]
    assert [len(r.lifted_clique) for r in reports] == [16, 64]
    assert series(1, base) == reports[0].output
    assert corollary_943(2, base).actual == 33


def test_series_grows_the_clique_from_reserves(spread5):
    base = SeriesBase(spread5, (1, 2), 0, reserves=((3, 4), (0,)))
    reports = list(iterate_series(2, base))
    assert [r.actual for r in reports] == [5 * 16 - 2 * 12 + 1, 57 * 16 - 4 * 12 + 1]
    assert [len(r.lifted_clique) for r in reports] == [4, 8]
    for report in reports:
        assert report.actual == report.predicted
        assert is_clique(report.output, report.lifted_clique)
    assert set(reports[0].provenance[list(reports[0].lifted_clique)].tolist()) == {0}


def test_anchor_base_searches_sprime_and_clique_together(spread5):
    base = anchor_base(spread5, [4, 3, 2, 1])
    assert (base.clique, base.s_prime_index, base.anchored, base.reserves) == ((1, 2, 3, 4), 0, (1, 2, 3, 4), ((0,),))
    assert select_anchor(spread5, 5) == (0, (1, 2, 3, 4))
    assert anchored_clique(spread5, 2) == (0, 1, 3, 4)
    assert reserve_cliques(spread5, [1, 2]) == ((0, 3, 4),)
    assert reserve_cliques(spread5, [], limit=0) == ()
    with pytest.raises(NoAnchor):
        select_anchor(spread5.subcode([0]), 1)


def test_corollary_needs_a_base_above_two():
    with pytest.raises(MissingBase):
        corollary_943(3)


@pytest.mark.slow
def test_corollary_at_q2():
    report = corollary_943(2)
    assert report.predicted == report.actual == 5013
    assert len(report.lifted_clique) == 49
    assert is_clique(report.output, report.lifted_clique)
    verified = verify(report.output, 1)
    assert verified.passed and verified.min_distance == 4


@pytest.mark.slow
def test_series_at_two_steps_q2():
    base = build_series_base(2, workers=4)
    reports = list(iterate_series(2, base))
    assert [r.actual for r in reports] == [5013, series_size_formula(2, 2)] == [5013, 321421]
    assert [len(r.lifted_clique) for r in reports] == [49, 343]
    final = reports[-1]
    assert is_clique(final.output, final.lifted_clique)
    verified = verify(final.output, 1, ByCopies(final.provenance, pairs=10**6, seed=11))
    assert verified.passed and verified.min_distance == 4
    assert verified.mode == "copies+sampled:1000000"


@pytest.mark.slow
def test_lifted_gabidulin_planes_combine_with_the_77_base():
    rank_code = gabidulin(F2, 3, 5, 2)
    c1, clique1 = lift(rank_code), monomial_clique(rank_code)
    base = build_series_base(2, workers=4)
    report = combine(CombineSpec(c1, clique1, base.code, base.s_prime), base.anchored)
    assert (len(c1), len(clique1), len(base.code), len(base.anchored)) == (1024, 32, 77, 7)
    assert report.predicted == report.actual == 1024 * 64 + 32 * 12 + 1 == 65921
    assert len(report.lifted_clique) == 32 * 7
    assert is_clique(report.output, report.lifted_clique)
    verified = verify(report.output, 1, ByCopies(report.provenance, pairs=10**6))
    assert verified.passed and verified.min_distance == 4
