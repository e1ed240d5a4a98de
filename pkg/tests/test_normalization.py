import math
import random

import numpy as np
import pytest

from oa2net.coauthorship import CoMatrix, co_matrix_from_works
from oa2net.errors import DomainError
from oa2net.netmodel import WeightedNetwork
from oa2net.normalization import (
    IndexMatrix,
    activity_index,
    expected_matrix,
    log_activity,
    normalize,
    transform_weights,
)

from helpers import random_works


def uniform_2x2():
    return CoMatrix(
        ["SI", "US"],
        {("SI", "SI"): 1, ("US", "US"): 1, ("SI", "US"): 1},
    )


# -- transforms ---------------------------------------------------------------

def test_log2_range_reduction():
    m = CoMatrix(["SI", "US"], {("SI", "SI"): 69440, ("US", "US"): 69440,
                                ("SI", "US"): 1})
    out = transform_weights(m, "log2")
    assert out.get("SI", "SI") == pytest.approx(16.0835, abs=5e-5)
    assert out.get("SI", "US") == 0.0


def test_sqrt_transform():
    m = CoMatrix(["SI", "US"], {("SI", "SI"): 4, ("US", "US"): 4, ("SI", "US"): 4})
    out = transform_weights(m, "sqrt")
    assert out.get("SI", "US") == 2.0


def test_log2_domain_error_names_cell():
    m = CoMatrix(["SI", "US"], {("SI", "SI"): 1, ("US", "US"): 1, ("SI", "US"): 0})
    with pytest.raises(DomainError) as err:
        transform_weights(m, "log2")
    assert "(SI,US)" in str(err.value)


def test_absent_cells_stay_absent(table1_matrix):
    out = transform_weights(table1_matrix, "sqrt")
    assert out.get("AU", "US") is None
    assert out.get("SI", "ES") == pytest.approx(math.sqrt(2))


def test_transform_preserves_weight_order():
    rng = random.Random(3)
    for _ in range(15):
        works = random_works(rng, n_works=15)
        co = co_matrix_from_works(works)
        if not co.n:
            continue
        cells = [(a, b) for a, b, _ in co.items()]
        raw = [co.get(a, b) for a, b in cells]
        for fn in ("sqrt", "log2"):
            out = transform_weights(co, fn)
            mapped = [out.get(a, b) for a, b in cells]
            assert np.array_equal(np.argsort(raw, kind="stable"),
                                  np.argsort(mapped, kind="stable"))


def test_network_transform_maps_weights():
    net = WeightedNetwork(["a", "b"], [(1, 2, 9)])
    out = transform_weights(net, "sqrt")
    assert out.weight(1, 2) == 3.0


def test_network_log2_drops_weight_one_links():
    net = WeightedNetwork(["a", "b", "c"], [(1, 2, 1), (1, 3, 8)])
    out = transform_weights(net, "log2")
    assert out.weight(1, 2) is None and out.weight(1, 3) == 3.0


def test_unknown_transform_rejected(table1_matrix):
    with pytest.raises(ValueError):
        transform_weights(table1_matrix, "cube")


# -- stochastic / jaccard / salton ---------------------------------------------

def test_jaccard_table1_spot_value(table1_matrix):
    j = normalize(table1_matrix, "jaccard")
    # by hand: 2 / (6 + 2 - 2)
    assert j.get("SI", "US") == pytest.approx(1 / 3, rel=1e-12)


def test_salton_table1_spot_value(table1_matrix):
    s = normalize(table1_matrix, "salton")
    # by hand: 2 / sqrt(6 * 2)
    assert s.get("SI", "US") == pytest.approx(2 / math.sqrt(12), rel=1e-12)


def test_stochastic_table1_spot_value(table1_matrix):
    m = normalize(table1_matrix, "stochastic")
    # by hand: row sum for SI is 1+1+2+1+6+2 = 13
    assert m.get("SI", "US") == pytest.approx(2 / 13, rel=1e-12)
    assert m.get("US", "SI") == pytest.approx(2 / 4, rel=1e-12)


def test_stochastic_rows_sum_to_one():
    rng = random.Random(8)
    for _ in range(20):
        co = co_matrix_from_works(random_works(rng, n_works=rng.randint(2, 20)))
        if not co.n:
            continue
        m = normalize(co, "stochastic")
        for a in co.codes:
            row = [m.get(a, b) for b in co.codes if m.get(a, b) is not None]
            assert sum(row) == pytest.approx(1.0, rel=1e-9)


def test_jaccard_le_salton_cellwise():
    rng = random.Random(21)
    for _ in range(20):
        co = co_matrix_from_works(random_works(rng, n_works=rng.randint(2, 20)))
        if not co.n:
            continue
        j = normalize(co, "jaccard")
        s = normalize(co, "salton")
        for (a, b), jv in j.cells.items():
            assert jv <= s.cells[(a, b)] + 1e-12
            assert 0 <= jv <= 1 and 0 <= s.cells[(a, b)] <= 1


def test_normalized_values_absent_where_input_absent(table1_matrix):
    for method in ("stochastic", "jaccard", "salton"):
        out = normalize(table1_matrix, method)
        assert out.get("AU", "US") is None


def test_unknown_method_rejected(table1_matrix):
    with pytest.raises(ValueError):
        normalize(table1_matrix, "cosine-ish")


# -- expected / activity / log-activity -----------------------------------------

def test_expected_uniform_matrix():
    e = expected_matrix(uniform_2x2())
    # R = Q = 2 everywhere, T = 4, so every expected cell is 1
    for a in ("SI", "US"):
        for b in ("SI", "US"):
            assert e.get(a, b) == pytest.approx(1.0)


def test_expected_table1_spot_value(table1_matrix):
    e = expected_matrix(table1_matrix)
    # by hand: 13 * 4 / 29
    assert e.get("SI", "US") == pytest.approx(13 * 4 / 29, rel=1e-12)
    # expectation exists even where the observation is absent
    assert e.get("AU", "US") == pytest.approx(2 * 4 / 29, rel=1e-12)


def test_expected_single_country():
    m = CoMatrix(["SI"], {("SI", "SI"): 7})
    assert expected_matrix(m).get("SI", "SI") == pytest.approx(7.0)


def test_expected_total_is_T():
    rng = random.Random(31)
    for _ in range(20):
        co = co_matrix_from_works(random_works(rng, n_works=rng.randint(2, 25)))
        if not co.n:
            continue
        e = expected_matrix(co)
        assert sum(e.cells.values()) == pytest.approx(co.T, rel=1e-9)


def test_expected_needs_positive_total():
    with pytest.raises(DomainError):
        expected_matrix(CoMatrix(["SI"], {("SI", "SI"): 0}))


def test_activity_uniform_is_one():
    a = activity_index(uniform_2x2())
    assert all(v == pytest.approx(1.0) for v in a.cells.values())


def test_activity_table1_spot_value(table1_matrix):
    a = activity_index(table1_matrix)
    # by hand: 2 * 29 / (13 * 4) = 58 / 52
    assert a.get("SI", "US") == pytest.approx(58 / 52, rel=1e-12)


def test_activity_above_one_for_overrepresented_cell():
    co = CoMatrix(
        ["DE", "SI", "US"],
        {("DE", "DE"): 2, ("SI", "SI"): 2, ("US", "US"): 2,
         ("DE", "SI"): 2, ("DE", "US"): 1, ("SI", "US"): 1},
    )
    a = activity_index(co)
    assert a.get("DE", "SI") > 1


def test_activity_times_expected_recovers_counts():
    rng = random.Random(77)
    for _ in range(20):
        co = co_matrix_from_works(random_works(rng, n_works=rng.randint(2, 25)))
        if not co.n:
            continue
        a = activity_index(co)
        e = expected_matrix(co)
        for (x, y), av in a.cells.items():
            assert av * e.cells[(x, y)] == pytest.approx(co.get(x, y), rel=1e-9)


def test_activity_absent_for_absent_cells(table1_matrix):
    a = activity_index(table1_matrix)
    assert a.get("AU", "US") is None


def test_log_activity_values(table1_matrix):
    a = activity_index(table1_matrix)
    b = log_activity(a)
    assert b.get("SI", "US") == pytest.approx(math.log2(58 / 52), rel=1e-12)
    # hand arithmetic: log2(1.11538...) = 0.15754...
    assert b.get("SI", "US") == pytest.approx(0.15754, abs=5e-5)


def test_log_activity_zero_for_uniform():
    b = log_activity(activity_index(uniform_2x2()))
    assert all(v == 0.0 for v in b.cells.values())
    assert not any(b.imputed)


def test_log_activity_imputes_missing_links(table1_matrix):
    b = log_activity(activity_index(table1_matrix))
    assert b.get("AU", "US") == 0.0
    assert ("AU", "US") in b.imputed and ("US", "AU") in b.imputed
    assert ("SI", "US") not in b.imputed


def test_log_activity_requires_activity_kind(table1_matrix):
    with pytest.raises(ValueError):
        log_activity(expected_matrix(table1_matrix))


def test_activity_and_log_symmetric():
    rng = random.Random(6)
    for _ in range(10):
        co = co_matrix_from_works(random_works(rng, n_works=rng.randint(2, 25)))
        if not co.n:
            continue
        a = activity_index(co)
        b = log_activity(a)
        for x in co.codes:
            for y in co.codes:
                assert a.get(x, y) == a.get(y, x)
                assert b.get(x, y) == b.get(y, x)


# -- IndexMatrix CSV -----------------------------------------------------------

def test_index_matrix_csv_round_trip(table1_matrix, tmp_path):
    j = normalize(table1_matrix, "jaccard")
    path = tmp_path / "j.csv"
    j.to_csv(path)
    back = IndexMatrix.from_csv(path, kind="jaccard")
    assert back.codes == j.codes
    for key, v in j.cells.items():
        assert back.cells[key] == pytest.approx(v, rel=1e-15)


def test_index_matrix_flags_sidecar(table1_matrix, tmp_path):
    b = log_activity(activity_index(table1_matrix))
    path, flags = tmp_path / "b.csv", tmp_path / "b.flags.csv"
    b.to_csv(path, flags_path=flags)
    text = flags.read_text(encoding="utf-8")
    lines = text.splitlines()
    assert lines[0] == ",AU,DE,ES,IT,SI,US"
    au_row = lines[1].split(",")
    assert au_row[0] == "AU"
    # AU-US imputed -> flag 1; AU-SI measured -> empty
    assert au_row[6] == "1" and au_row[5] == ""
