"""Key management for trusted-node QKD networks.

Computes optimal multi-path ("flooding") key-relay plans over a
capacitated graph, executes the XOR-announcement relay protocol among
simulated nodes, quantifies end-to-end trust under partially trusted
intermediaries, and plans inaugural-authentication bootstrapping.
"""

from .adversary_sim import (
    AdversaryModel,
    AuditReport,
    KnowledgeBase,
    VariableIndex,
    audit_run,
    can_derive,
    concat_expression,
    ingest,
    xor_expression,
)
from .auth_planner import (
    FloodedSiat,
    SiatPlan,
    WcParams,
    flooded_siat,
    key_scaling,
    round_size_fixed_point,
    siat_plan,
    siat_plan_all,
    wc_key_length,
    wc_key_length_exact,
)
from .errors import InfeasibleError, InputError, KeyfloodError
from .flood_engine import (
    Announcement,
    Bits,
    FloodRun,
    KeyMaterial,
    Transcript,
    assemble_rate,
    assemble_secure,
    assert_one_time_pad,
    mint_link_keys,
    reconstruct_sink_payload,
    run_flood,
    run_linear_chain,
    split_key,
    xor_keys,
)
from .flow_routing import (
    DirectedNetwork,
    FloodingPlan,
    FlowResult,
    PathSet,
    enumerate_orientations,
    find_mnops,
    make_plan,
    max_disjoint_paths,
    max_flow,
    optimal_flood_value,
    undirected_max_flow,
)
from .topology import (
    MergedTrust,
    Network,
    TrustTable,
    edge_key,
    load_network,
    load_trust,
    merge_trust,
)
from .trust_calculus import (
    Partition,
    RelayPath,
    TrustAssessment,
    compromise_oracle,
    compromise_oracle_monte_carlo,
    compromise_probability_closed,
    optimize_partition,
    partitioned_trust_from_values,
    trust_rate_frontier,
    trust_symmetric,
    trust_xor,
    xor_trust_from_path_values,
)

__version__ = "0.1.0"
