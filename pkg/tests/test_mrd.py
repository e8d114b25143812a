import numpy as np
import pytest

from cdc import is_clique, verify
from errors import EnumerationTooLarge, InvalidSpec, NotPolynomialBacked, ShapeMismatch
from gf_core import make_field, make_tower
from mrd import (
    expurgate6,
    expurgate7,
    gabidulin,
    gabidulin_size,
    lift,
    lifted_mrd,
    monomial_clique,
    rank_distance,
    read_polys,
    sample_gabidulin,
    trace_zero_basis,
    write_polys,
)
from subspace_linalg import batch_rref, intersection_dimension, subspace_from_rows

F2 = make_field(2)

GRID = [(q, m, n, d) for q in (2, 3) for n in (1, 2, 3, 4) for m in range(1, n + 1) for d in range(1, m + 1)]
ENUMERABLE = [row for row in GRID if row[0] ** (row[2] * (row[1] - row[3] + 1)) <= 2**17]
SAMPLED = [row for row in GRID if row not in ENUMERABLE]


@pytest.mark.parametrize("q,m,n,d", ENUMERABLE)
def test_gabidulin_size_and_rank_distance(q, m, n, d):
    code = gabidulin(make_field(q), m, n, d)
    assert len(code) == q ** (n * (m - d + 1))
    weights = code.rank_weights()
    # linear code: minimum distance is the minimum nonzero weight
    assert weights[weights > 0].min() == d
    flat = np.asarray(code.codewords).reshape(len(code), -1)
    assert len({row.tobytes() for row in flat}) == len(code)


@pytest.mark.parametrize("q,m,n,d", SAMPLED)
def test_large_gabidulin_codes_by_sampling(q, m, n, d):
    field = make_field(q)
    assert gabidulin_size(field, m, n, d) == q ** (n * (m - d + 1)) > 2**17
    sample = sample_gabidulin(field, m, n, d, 4000, seed=5)
    assert sample.codewords.shape == (4000, m, n)
    weights = sample.rank_weights()
    assert weights[weights > 0].min() >= d
    # linear code: differences are codewords too
    diffs = (sample.codewords[::2] - sample.codewords[1::2]) % q
    ranks = batch_rref(field, diffs)[1]
    assert ranks[ranks > 0].min() >= d
    assert np.array_equal(sample_gabidulin(field, m, n, d, 4000, seed=5).codewords, sample.codewords)


def test_samples_are_codewords():
    full = {c.tobytes() for c in gabidulin(F2, 3, 4, 2).codewords}
    sample = sample_gabidulin(F2, 3, 4, 2, 500)
    assert all(c.tobytes() in full for c in sample.codewords)
    with pytest.raises(EnumerationTooLarge):
        gabidulin(make_field(3), 4, 4, 1)
    with pytest.raises(InvalidSpec):
        sample_gabidulin(F2, 3, 4, 4, 10)


def test_gabidulin_edge_cases():
    single = gabidulin(F2, 2, 3, 3)
    assert len(single) == 1
    assert not single.codewords.any()
    with pytest.raises(InvalidSpec):
        gabidulin(F2, 4, 3, 1)
    with pytest.raises(EnumerationTooLarge):
        gabidulin(F2, 3, 3, 1, cap=100)


def test_rank_distance():
    code = gabidulin(F2, 2, 2, 2)
    assert rank_distance(code.matrix(1), code.matrix(2)) == 2
    with pytest.raises(ShapeMismatch):
        rank_distance(code.matrix(0), gabidulin(F2, 2, 3, 2).matrix(0))


def test_lifted_mrd_planes_in_f2_6():
    code = lifted_mrd(F2, 6, 3, 4)
    assert len(code) == 64
    assert code.claimed_min_distance == 4
    report = verify(code, 1)
    assert report.passed
    assert report.min_distance == 4
    assert report.distance_histogram == {4: 1568, 6: 448}
    s0 = subspace_from_rows(F2, 6, np.hstack([np.zeros((3, 3), dtype=np.int64), np.eye(3, dtype=np.int64)]))
    assert all(intersection_dimension(w, s0) == 0 for w in code)


def test_lifted_mrd_transposes_wide_spaces():
    code = lifted_mrd(F2, 6, 4, 4)
    assert code.k == 4
    assert len(code) == 16
    assert verify(code, 2).min_distance == 4
    with pytest.raises(InvalidSpec):
        lifted_mrd(F2, 6, 3, 3)


def test_monomial_cliques():
    base = gabidulin(F2, 3, 3, 2)
    clique = monomial_clique(base)
    assert len(clique) == 8
    assert is_clique(lift(base), clique)
    assert len(monomial_clique(gabidulin(F2, 3, 5, 2))) == 32
    with pytest.raises(NotPolynomialBacked):
        monomial_clique(lift(base))


def test_expurgate6():
    exp = expurgate6(2)
    assert len(exp.code) == 56
    assert exp.removed_count == 8
    assert len(exp.clique) == 7
    assert is_clique(exp.code, exp.clique)
    assert all(exp.codebook.maps[i].is_monomial for i in exp.clique)
    assert exp.codebook.to_code() == exp.code
    report = verify(exp.code, 1)
    assert report.passed and report.min_distance == 4
    assert exp.special not in exp.code


def test_expurgate7():
    exp = expurgate7(2)
    assert exp.code.v == 7
    assert exp.removed_count == 120
    assert len(exp.code) == 256 - 120
    assert len(exp.clique) == 16
    assert is_clique(exp.code, exp.clique)
    report = verify(exp.code, 1)
    assert report.passed and report.min_distance == 4


def test_trace_zero_basis():
    tower = make_tower(F2, 4)
    basis = trace_zero_basis(tower)
    assert len(basis) == 3
    assert not np.asarray(tower.trace(np.asarray(basis))).any()


def test_poly_sidecar(tmp_path):
    polys = expurgate6(2).polys
    write_polys(tmp_path / "e6.poly", polys)
    assert np.array_equal(read_polys(tmp_path / "e6.poly"), polys)


def test_lifted_gabidulin_planes_in_f2_8():
    rank_code = gabidulin(F2, 3, 5, 2)
    code = lift(rank_code)
    report = verify(code, 1)
    assert len(code) == 1024
    assert report.pairs_checked == 1024 * 1023 // 2
    assert report.passed and report.min_distance == 4
    assert is_clique(code, monomial_clique(rank_code))
