"""oa2net: bibliographic networks from OpenAlex, analyzed and saved for Pajek."""

__version__ = "0.1.0"

from .coauthorship import (
    CoMatrix,
    TemporalCoSeries,
    co_matrix_from_groupby,
    co_matrix_from_works,
    countries_of_work,
    matrix_to_network,
    yearly_series,
)
from .clustering import (
    Dendrogram,
    DissimilarityMatrix,
    agglomerate,
    corrected_euclidean,
    ordered_matrix_export,
    prepare_for_clustering,
)
from .collection import (
    NetworkCollection,
    build_citation,
    build_collection,
    build_two_mode,
    build_vectors,
    write_collection,
)
from .corpus import (
    ExpansionTable,
    apply_threshold,
    expansion_candidates,
    join_lists,
    saturate,
    saturation_step,
)
from .netmodel import NodePartition, NodeVector, TwoModeNetwork, WeightedNetwork
from .normalization import (
    IndexMatrix,
    activity_index,
    expected_matrix,
    log_activity,
    normalize,
    transform_weights,
)
from .openalex import (
    OpenAlexClient,
    ResponseCache,
    WorkRecord,
    WorksFilter,
    build_query_url,
)
from .reduction import (
    CoreDecomposition,
    k_neighbor_skeleton,
    link_cut,
    mutual_pairs,
    weighted_degree_cores,
)
