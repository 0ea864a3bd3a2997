"""Popular matchings in house allocation: characterization, counting and hardness."""

from .bipartite import BipartiteGraph, GEDecomposition, Label, first_choice_graph, gallai_edmonds, max_matching
from .errors import (
    ConsistencyError,
    IncompleteListsError,
    InstanceError,
    InvalidMatchingError,
    NotMaximumError,
    NoPopularMatchingError,
    NotPopularError,
    ParseError,
    PopmatchError,
    SizeLimitError,
    SwitchingError,
)
from .fpras import (
    CountResult,
    ReducedInstance,
    build_reduction,
    count_perfect_exact,
    count_popular_hat,
    estimate_perfect,
)
from .hardness import ReductionOutput, cross_check, parse_graph, reduce_matching_to_cha
from .hat import FSLabelsHAT, HouseClass, PopularityVerdict, compute_fs_hat, find_popular_hat, is_popular_hat
from .instance import (
    House,
    Instance,
    add_last_resorts,
    ensure_last_resorts,
    more_popular,
    parse_instance,
    parse_matching,
    phi,
    serialize_instance,
    split_cha_to_hat,
    translate_matching,
    validate_matching,
)
from .oracle import (
    enumerate_matchings,
    oracle_count_perfect,
    oracle_count_popular,
    oracle_is_popular,
    oracle_popular_matchings,
    popularity_margin,
)
from .switching import (
    FSLabelsCHA,
    SwitchingGraph,
    SwitchingSet,
    apply_switching_move,
    build_switching_graph,
    compare_property2,
    compute_fs_cha,
    count_popular_cha,
    decompose_difference,
    enumerate_switching_sets,
    find_popular_cha,
    is_popular_cha,
    validate_switching_properties,
)

__version__ = "0.1.0"
