import io
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdc import (
    ByCopies,
    ConstantDimensionCode,
    Sampled,
    dumps,
    greedy_clique,
    is_clique,
    parse,
    read_code,
    read_indices,
    stats,
    verify,
    write_code,
    write_indices,
)
from errors import AmbientMismatch, DimMismatch, DuplicateCodeword, EmptyCode, InvalidSpec, ParseError
from gf_core import make_field
from mrd import gabidulin, lift
from subspace_linalg import enumerate_subspaces, subspace_from_rows

F2 = make_field(2)


def lines(*rows):
    return ConstantDimensionCode(F2, 4, 2, tuple(subspace_from_rows(F2, 4, r) for r in rows))


def test_spread_passes_exhaustive_verification(spread4):
    report = verify(spread4, 1)
    assert report.passed
    assert report.mode == "exhaustive"
    assert report.pairs_checked == 6
    assert report.min_distance == 4
    assert report.max_intersection_dim == 0
    assert report.distance_histogram == {4: 6}
    assert report.seed is None


def test_violation_reports_first_offending_pair():
    code = lines(
        [[1, 0, 0, 0], [0, 1, 0, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 1]],
        [[1, 0, 0, 0], [0, 0, 1, 0]],
    )
    report = verify(code, 0)
    assert not report.passed
    assert report.violating_pair == (0, 2)
    assert report.min_distance == 2
    assert report.distance_histogram == {2: 2, 4: 1}
    assert verify(code, 1).passed


def test_verify_rejects_duplicates_and_empty_codes():
    code = lines([[1, 0, 0, 0], [0, 1, 0, 0]], [[0, 0, 1, 0], [0, 0, 0, 1]], [[0, 1, 0, 0], [1, 0, 0, 0]])
    with pytest.raises(DuplicateCodeword) as err:
        verify(code)
    assert err.value.pair == (0, 2)
    assert err.value.code == "DuplicateCodeword"
    with pytest.raises(EmptyCode):
        verify(ConstantDimensionCode(F2, 4, 2, ()))


def test_single_codeword_has_no_pairs():
    report = verify(lines([[1, 0, 0, 0], [0, 1, 0, 0]]))
    assert report.pairs_checked == 0
    assert report.distance_histogram == {}
    assert report.passed


def test_sampled_verification_is_seeded():
    code = ConstantDimensionCode(F2, 5, 2, tuple(enumerate_subspaces(F2, 5, 2)))
    first = verify(code, 1, Sampled(100, seed=7))
    second = verify(code, 1, Sampled(100, seed=7))
    assert first.mode == "sampled:100"
    assert first.pairs_checked == 100
    assert first.seed == 7
    assert first == second
    assert verify(code, 1, Sampled(10**6)).mode == "exhaustive"


def test_chunked_verification_agrees_with_single_chunk():
    code = ConstantDimensionCode(F2, 5, 2, tuple(enumerate_subspaces(F2, 5, 2)))
    assert verify(code, 1, chunk_size=97, workers=3) == verify(code, 1, workers=1)


def test_copy_structured_verification_covers_every_pair_inside_a_copy():
    code = ConstantDimensionCode(F2, 5, 2, tuple(enumerate_subspaces(F2, 5, 2)))
    owners = np.arange(155) // 31
    report = verify(code, 1, ByCopies(owners, pairs=50, seed=3))
    assert report.mode == "copies+sampled:50"
    assert report.pairs_checked == 5 * 31 * 30 // 2 + 50
    assert report.seed == 3 and report.passed
    assert report == verify(code, 1, ByCopies(owners, pairs=50, seed=3), chunk_size=64)
    assert verify(code, 1, ByCopies(owners, pairs=10**6)).mode == "exhaustive"
    with pytest.raises(InvalidSpec):
        verify(code, 1, ByCopies(owners[:-1]))

    clash = lines(
        [[1, 0, 0, 0], [0, 1, 0, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 1]],
        [[1, 0, 0, 0], [0, 0, 1, 0]],
    )
    report = verify(clash, 0, ByCopies(np.array([0, 1, 0]), pairs=0))
    assert report.violating_pair == (0, 2)
    assert report.pairs_checked == 1


def test_container_checks():
    with pytest.raises(DimMismatch):
        ConstantDimensionCode(F2, 4, 2, (subspace_from_rows(F2, 4, [[1, 0, 0, 0]]),))
    with pytest.raises(AmbientMismatch):
        ConstantDimensionCode(F2, 4, 1, (subspace_from_rows(F2, 5, [[1, 0, 0, 0, 0]]),))
    with pytest.raises(InvalidSpec):
        ConstantDimensionCode(F2, 4, 5, ())


def test_canonical_sorting(spread5):
    shuffled = spread5.subcode([3, 0, 4, 2, 1])
    assert shuffled != spread5
    assert shuffled.sorted() == spread5
    assert spread5.index_of(shuffled[0]) == 3
    assert shuffled[1] in spread5


def test_cliques(spread5):
    assert is_clique(spread5, range(5))
    assert greedy_clique(spread5) == [0, 1, 2, 3, 4]
    code = lines(
        [[1, 0, 0, 0], [0, 1, 0, 0]],
        [[1, 0, 0, 0], [0, 0, 1, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 1]],
    )
    assert not is_clique(code, [0, 1])
    assert greedy_clique(code) == [2, 0]
    assert greedy_clique(code, order=[1, 0, 2]) == [1]


def test_stats(spread5):
    s = stats(spread5)
    assert s.n == 5
    assert s.distance_histogram == {4: 10}
    assert s.clique_size == 5
    assert s.clique_cap == 5


def test_serialize_matches_golden(spread4, golden):
    assert dumps(spread4) == (golden / "spread4.cdc").read_text()


def test_serialize_sorts_and_keeps_comments(spread5):
    text = dumps(spread5.subcode([4, 3, 2, 1, 0]), comments=["augmented: base=4 added=1 optimal=true seed=none"])
    header, comment, first = text.split("\n")[:3]
    assert header == "cdc 1 p=2 e=1 v=4 k=2 n=5"
    assert comment == "# augmented: base=4 added=1 optimal=true seed=none"
    assert first == "0 0 1 0"
    assert parse(text) == spread5


def test_extension_field_file_carries_modulus():
    f = make_field(2, 2)
    code = ConstantDimensionCode(f, 2, 1, (subspace_from_rows(f, 2, [[1, 3]]), subspace_from_rows(f, 2, [[0, 1]])))
    text = dumps(code)
    assert text.split("\n")[1] == "mod 1 1 1"
    assert parse(io.StringIO(text)) == code.sorted()


@pytest.mark.parametrize(
    "text,line",
    [
        ("cdc 1 p=2 e=1 v=4 k=2 n=1\n1 0 0 0\n0 1 0 0", 3),
        ("cdc 2 p=2 e=1 v=4 k=2 n=1\n1 0 0 0\n0 1 0 0\n", 1),
        ("cdc 1 p=2 e=1 v=4 k=2 n=1\n1 1 0 0\n1 0 0 0\n", 2),
        ("cdc 1 p=2 e=1 v=4 k=2 n=1\n1 0 0 0\n0 1 0\n", 3),
        ("cdc 1 p=2 e=1 v=4 k=2 n=1\n1 0 0 2\n0 1 0 0\n", 2),
        ("cdc 1 p=2 e=1 v=4 k=2 n=2\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n", 4),
        ("cdc 1 p=2 e=2 v=2 k=1 n=1\nmod 1 0 1\n0 1\n", 2),
        ("cdc 1 p=4 e=1 v=2 k=1 n=1\n0 1\n", 1),
        ("cdc 1 p=2 e=1 v=4 k=2 n=2\n0 0 1 0\n0 0 0 1\n\n1 0 0 0\n0 1 0 0\n", 5),
        ("cdc 1 p=2 e=1 v=4 k=2 n=2\n1 0 0 0\n0 1 0 0\n\n1 0 0 0\n0 1 0 0\n", 5),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert str(err.value).startswith(f"line {line}:")


@settings(max_examples=25)
@given(st.sets(st.integers(0, 34), min_size=1, max_size=12))
def test_parse_inverts_serialize(indices):
    spaces = list(enumerate_subspaces(F2, 4, 2))
    code = ConstantDimensionCode(F2, 4, 2, tuple(spaces[i] for i in sorted(indices)))
    assert parse(dumps(code)) == code


def test_file_round_trip(tmp_path, spread5):
    write_code(tmp_path / "c.cdc", spread5)
    assert read_code(tmp_path / "c.cdc") == spread5
    write_indices(tmp_path / "c.clique", np.array([4, 1]))
    assert read_indices(tmp_path / "c.clique") == [4, 1]
    (tmp_path / "d.clique").write_text("# clique\n1 2\n3  # trailing\n")
    assert read_indices(tmp_path / "d.clique") == [1, 2, 3]


def test_unsorted_blocks_parse_only_on_request():
    text = "cdc 1 p=2 e=1 v=4 k=2 n=2\n0 0 1 0\n0 0 0 1\n\n1 0 0 0\n0 1 0 0\n"
    with pytest.raises(ParseError):
        parse(text)
    code = parse(text, require_sorted=False)
    assert code.sorted() == parse(dumps(code))


@pytest.mark.slow
def test_exhaustive_verification_throughput_at_v9():
    code = lift(gabidulin(F2, 4, 5, 2)).subcode(range(4000))
    start = time.perf_counter()
    report = verify(code, 1, workers=1)
    elapsed = time.perf_counter() - start
    assert report.passed and report.pairs_checked == 4000 * 3999 // 2
    assert report.pairs_checked / elapsed >= 2e6
