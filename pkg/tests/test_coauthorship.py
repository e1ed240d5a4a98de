import random

import pytest

from oa2net.coauthorship import (
    CoMatrix,
    CoMatrixConsistencyWarning,
    co_matrix_from_groupby,
    co_matrix_from_works,
    countries_of_work,
    group_by_filter,
    matrix_to_network,
    yearly_series,
)
from oa2net.errors import ParseError, TransportError
from oa2net.openalex import GroupCount, GroupResult, WorkRecord, build_query_url

from helpers import groupby_responses_from_works, random_works


# -- countries_of_work -------------------------------------------------------

def test_countries_multiplicity_discarded():
    rec = WorkRecord(id="W1", countries=["SI", "US", "SI"])
    assert countries_of_work(rec) == {"SI", "US"}


def test_countries_heavy_repetition():
    rec = WorkRecord(id="W1", countries=["AU", "SI", "AU", "AU", "AU", "SI"])
    assert countries_of_work(rec) == {"AU", "SI"}


def test_countries_empty():
    assert countries_of_work(WorkRecord(id="W1")) == frozenset()


def test_invalid_codes_dropped_and_tallied():
    tally = {}
    rec = WorkRecord(id="W1", countries=["SI", "ZZ", "YU", "us"])
    assert countries_of_work(rec, invalid=tally) == {"SI", "US"}
    assert tally == {"ZZ": 1, "YU": 1}


# -- co_matrix_from_works ----------------------------------------------------

def test_table1_matrix_full(table1_matrix):
    m = table1_matrix
    assert m.codes == ("AU", "DE", "ES", "IT", "SI", "US")
    assert [m.get(c, c) for c in m.codes] == [1, 1, 2, 1, 6, 2]
    assert m.get("SI", "US") == 2
    assert m.get("SI", "ES") == 2
    assert m.get("SI", "AU") == 1
    assert m.get("SI", "DE") == 1
    assert m.get("SI", "IT") == 1
    assert m.get("DE", "IT") == 1
    assert m.get("AU", "US") is None
    assert m.get("AU", "DE") is None


def test_single_pair_work():
    m = co_matrix_from_works([WorkRecord(id="W1", countries=["AU", "SI"])])
    assert m.codes == ("AU", "SI")
    assert m.get("AU", "AU") == 1 and m.get("SI", "SI") == 1
    assert m.get("AU", "SI") == 1


def test_single_country_works_excluded():
    works = [
        WorkRecord(id="W1", countries=["SI", "SI"]),
        WorkRecord(id="W2", countries=["US"]),
    ]
    m = co_matrix_from_works(works)
    assert m.codes == () and m.T == 0


def test_marginals_table1(table1_matrix):
    m = table1_matrix
    assert m.R("SI") == 13 and m.Q("SI") == 13
    assert m.R("US") == 4
    assert m.T == 29


def test_matrix_invariants_random():
    rng = random.Random(11)
    for _ in range(25):
        works = random_works(rng, n_works=rng.randint(1, 20))
        m = co_matrix_from_works(works)
        for a in m.codes:
            assert m.R(a) == m.Q(a)
            for b in m.codes:
                assert m.get(a, b) == m.get(b, a)
                v = m.get(a, b)
                if a != b and v is not None:
                    assert v <= min(m.get(a, a), m.get(b, b))
        assert m.T == sum(m.R(a) for a in m.codes)


def test_constructor_rejects_bound_violation():
    with pytest.raises(ValueError):
        CoMatrix(["SI", "US"], {("SI", "SI"): 1, ("US", "US"): 5, ("SI", "US"): 3})


def test_constructor_rejects_invalid_code():
    with pytest.raises(ValueError):
        CoMatrix(["Q1"], {})


# -- co_matrix_from_groupby --------------------------------------------------

def test_groupby_direct_placement():
    responses = {
        "SI": [GroupCount("SI", 5), GroupCount("US", 2)],
        "US": [GroupCount("US", 3), GroupCount("SI", 2)],
    }
    m = co_matrix_from_groupby(responses)
    assert m.get("SI", "US") == 2 and m.get("US", "SI") == 2
    assert m.get("SI", "SI") == 5 and m.get("US", "US") == 3


def test_groupby_symmetry_fills_truncated_side():
    responses = {
        "SI": [GroupCount("SI", 5)],  # truncated: US entry missing
        "US": [GroupCount("US", 3), GroupCount("SI", 2)],
    }
    m = co_matrix_from_groupby(responses)
    assert m.get("SI", "US") == 2


def test_groupby_conflict_keeps_larger_and_warns():
    responses = {"SI": [("US", 2)], "US": [("SI", 4)]}
    with pytest.warns(CoMatrixConsistencyWarning):
        m = co_matrix_from_groupby(responses)
    assert m.get("SI", "US") == 4


def test_groupby_invalid_focal_code_dropped():
    tally = {}
    responses = {"ZZ": [("SI", 1)], "SI": [("SI", 2), ("US", 1)], "US": [("SI", 1)]}
    m = co_matrix_from_groupby(responses, invalid=tally)
    assert "ZZ" in tally
    assert set(m.codes) == {"SI", "US"}


def test_groupby_equivalence_with_works():
    rng = random.Random(23)
    for _ in range(20):
        works = random_works(rng, n_works=rng.randint(2, 25))
        from_works = co_matrix_from_works(works)
        derived = groupby_responses_from_works(works)
        from_groups = co_matrix_from_groupby(derived)
        assert from_groups == from_works


def test_groupby_diagonal_dominance_of_derived_responses():
    rng = random.Random(29)
    works = random_works(rng, n_works=30)
    for focal, groups in groupby_responses_from_works(works).items():
        counts = {g.key: g.count for g in groups}
        assert counts[focal] == max(counts.values())


# -- CSV round trip ----------------------------------------------------------

def test_csv_round_trip_preserves_absence(table1_matrix, tmp_path):
    path = tmp_path / "co.csv"
    table1_matrix.to_csv(path)
    back = CoMatrix.from_csv(path)
    assert back == table1_matrix
    assert back.get("AU", "US") is None


def test_csv_rejects_asymmetric(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",SI,US\nSI,1,2\nUS,,1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        CoMatrix.from_csv(path)


def test_csv_rejects_non_integer(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",SI\nSI,1.5\n", encoding="utf-8")
    with pytest.raises(ParseError):
        CoMatrix.from_csv(path)


def test_empty_matrix_csv_round_trip(tmp_path):
    m = CoMatrix([], {})
    path = tmp_path / "empty.csv"
    m.to_csv(path)
    assert CoMatrix.from_csv(path) == m


# -- matrix_to_network -------------------------------------------------------

def test_table1_network_edges(table1_matrix):
    net = matrix_to_network(table1_matrix, include_loops=False)
    assert net.n == 6 and not net.directed
    got = {
        tuple(sorted((net.label(i), net.label(j)))): w
        for (i, j), w in net.links.items()
    }
    assert got == {
        ("AU", "SI"): 1.0,
        ("DE", "IT"): 1.0,
        ("DE", "SI"): 1.0,
        ("ES", "SI"): 2.0,
        ("IT", "SI"): 1.0,
        ("SI", "US"): 2.0,
    }


def test_empty_matrix_network():
    net = matrix_to_network(CoMatrix([], {}))
    assert net.n == 0 and not net.links


def test_single_country_self_loop():
    m = CoMatrix(["SI"], {("SI", "SI"): 4})
    net = matrix_to_network(m, include_loops=True)
    assert net.n == 1 and net.weight(1, 1) == 4


def test_universe_adds_isolates(table1_matrix):
    net = matrix_to_network(table1_matrix, universe=["AU", "FR", "DE"])
    assert net.n == 7 and net.has_label("FR")
    assert net.weighted_degree(net.index("FR")) == 0


# -- yearly series -----------------------------------------------------------

class SeriesClient:
    """fetch_group_counts double driven by {(country, year): [(key, count)]}."""

    def __init__(self, data, fail_years=()):
        self.data = data
        self.fail_years = set(fail_years)

    def fetch_group_counts(self, flt):
        fields = dict(flt.filters)
        country = fields["authorships.countries"]
        year = int(fields["publication_year"])
        if year in self.fail_years:
            raise TransportError(f"boom in {year}")
        pairs = self.data.get((country, year), [])
        return GroupResult(
            groups=tuple(GroupCount(k, c) for k, c in pairs),
            possibly_truncated=len(pairs) >= 200,
            url=build_query_url(flt),
        )


def test_yearly_series_single_year():
    client = SeriesClient({
        ("SI", 1990): [("SI", 3), ("US", 1)],
        ("US", 1990): [("US", 2), ("SI", 1)],
    })
    series = yearly_series(1990, 1990, client, countries=["SI", "US"])
    assert list(series.matrices) == [1990]
    assert series.matrices[1990].get("SI", "US") == 1


def test_yearly_series_rejects_reversed_range():
    with pytest.raises(ValueError):
        yearly_series(1991, 1990, SeriesClient({}))


def test_yearly_series_failures_do_not_abort():
    client = SeriesClient(
        {
            ("SI", 1990): [("SI", 2), ("US", 1)],
            ("US", 1990): [("US", 2), ("SI", 1)],
            ("SI", 1992): [("SI", 2), ("US", 2)],
            ("US", 1992): [("US", 2), ("SI", 2)],
        },
        fail_years=[1991],
    )
    series = yearly_series(1990, 1992, client, countries=["SI", "US"])
    assert sorted(series.matrices) == [1990, 1992]
    assert list(series.failures) == [1991]
    assert "boom" in series.failures[1991]


def test_yearly_series_omits_isolates():
    client = SeriesClient({
        ("SI", 1990): [("SI", 3), ("US", 1)],
        ("US", 1990): [("US", 2), ("SI", 1)],
        ("FR", 1990): [("FR", 9)],  # active but with no partners
    })
    series = yearly_series(1990, 1990, client, countries=["FR", "SI", "US"])
    assert series.matrices[1990].codes == ("SI", "US")


def test_series_save_names(tmp_path):
    client = SeriesClient({
        ("SI", 2001): [("SI", 2), ("US", 1)],
        ("US", 2001): [("US", 1), ("SI", 1)],
    })
    series = yearly_series(2001, 2001, client, countries=["SI", "US"])
    paths = series.save(tmp_path)
    assert [p.name for p in paths] == ["co_2001.csv"]


def test_group_by_filter_shape():
    flt = group_by_filter("SI", 1990)
    assert flt.group_by == "authorships.countries"
    assert flt.filters == (
        ("authorships.countries", "SI"),
        ("publication_year", "1990"),
    )
