import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oa2net.coauthorship import co_matrix_from_works, matrix_to_network
from oa2net.openalex import WorkRecord

TABLE1_ROWS = [
    ("W2001947224", ["SI", "US", "SI"]),
    ("W2021064255", ["ES", "SI", "ES", "ES"]),
    ("W1984191816", ["AU", "SI", "AU", "AU", "AU", "SI"]),
    ("W2096814473", ["SI", "DE", "IT", "IT", "IT", "IT"]),
    ("W2514227811", ["ES", "ES", "ES", "SI", "ES"]),
    ("W1981385379", ["US", "SI", "SI"]),
]


@pytest.fixture
def table1_works():
    return [WorkRecord(id=wid, countries=list(codes)) for wid, codes in TABLE1_ROWS]


@pytest.fixture
def table1_matrix(table1_works):
    return co_matrix_from_works(table1_works)


@pytest.fixture
def table1_network(table1_matrix):
    return matrix_to_network(table1_matrix, include_loops=False)
