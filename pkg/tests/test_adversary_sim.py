import itertools
import random

import pytest

from conftest import build_network, star_network
from keyflood.adversary_sim import (
    COLLECTIVE,
    DISHONEST,
    TRUSTED,
    AdversaryModel,
    KnowledgeBase,
    VariableIndex,
    audit_run,
    can_derive,
    concat_expression,
    derive_bits,
    ingest,
    xor_expression,
)
from keyflood.errors import InputError
from keyflood.flood_engine import (
    Bits,
    KeyMaterial,
    assemble_rate,
    assemble_secure,
    mint_link_keys,
    run_flood,
    run_linear_chain,
)
from keyflood.flow_routing import PathSet, make_plan, optimal_flood_value
from keyflood.trust_calculus import BROADCASTING, POOLING, TrustAssessment, compromise_oracle


def key(key_id, owners, bits01):
    return KeyMaterial(key_id=key_id, owner_pair=owners, bits=Bits.from01(bits01))


def chain_setup(seed=2):
    net = build_network({("A", "C"): 8, ("B", "C"): 8})
    keys = mint_link_keys(net, seed)
    run_keys = mint_link_keys(net, seed)
    _, transcript = run_linear_chain([run_keys[("A", "C")], run_keys[("B", "C")]])
    return net, keys, transcript


# ---------------------------------------------------------------------------
# knowledge base mechanics
# ---------------------------------------------------------------------------

def test_ingest_own_key_rank():
    k = key("k", ("A", "B"), "1011")
    index = VariableIndex([k])
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, k, index)
    assert kb.rank == 4
    assert can_derive(kb, k, index)
    assert derive_bits(kb, index.key_bit_exprs(k)) == k.bits


def test_ingest_announcement_grows_rank_by_length():
    net, keys, transcript = chain_setup()
    index = VariableIndex(keys.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, transcript, index)
    assert kb.rank == 8  # one relation per announced bit, all independent


def test_ingest_idempotent():
    net, keys, transcript = chain_setup()
    index = VariableIndex(keys.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, transcript, index)
    before = kb.rank
    ingest(kb, transcript, index)
    ingest(kb, keys[("A", "C")], index)
    mid = kb.rank
    ingest(kb, keys[("A", "C")], index)
    assert kb.rank == mid
    assert mid == before + 8


def test_inconsistent_facts_rejected():
    k = key("k", ("A", "B"), "1")
    index = VariableIndex([k])
    kb = KnowledgeBase(index.n_vars)
    kb.add_relation(0b1, 0)
    with pytest.raises(InputError, match="inconsistent"):
        kb.add_relation(0b1, 1)


def test_can_derive_monotone_under_new_facts():
    rng = random.Random(4)
    net, keys, transcript = chain_setup()
    index = VariableIndex(keys.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, transcript, index)
    targets = [index.key_bit_exprs(km) for km in keys.values()]
    derivable_before = [can_derive(kb, t) for t in targets]
    ingest(kb, keys[("A", "C")], index)
    derivable_after = [can_derive(kb, t) for t in targets]
    for before, after in zip(derivable_before, derivable_after):
        assert after or not before  # nothing flips true -> false


def test_variable_index_rejects_segments():
    k = key("k", ("A", "B"), "1011")
    seg = k.consume_prefix(2)
    with pytest.raises(InputError, match="segment"):
        VariableIndex([seg])


# ---------------------------------------------------------------------------
# chain knowledge claims
# ---------------------------------------------------------------------------

def test_chain_intermediary_learns_both_keys():
    net, keys, transcript = chain_setup()
    index = VariableIndex(keys.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, transcript, index)
    for km in keys.values():  # C owns both link keys
        ingest(kb, km, index)
    assert can_derive(kb, keys[("A", "C")], index)
    assert can_derive(kb, keys[("B", "C")], index)


def test_chain_eavesdropper_learns_only_the_combination():
    net, keys, transcript = chain_setup()
    index = VariableIndex(keys.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, transcript, index)
    k_ac, k_cb = keys[("A", "C")], keys[("B", "C")]
    assert not can_derive(kb, k_ac, index)
    assert not can_derive(kb, k_cb, index)
    combined = [
        a ^ b
        for a, b in zip(index.key_bit_exprs(k_ac), index.key_bit_exprs(k_cb))
    ]
    assert can_derive(kb, combined)
    assert derive_bits(kb, combined) == k_ac.bits.xor(k_cb.bits)


def test_diamond_sink_derives_all_delivered_segments(diamond):
    _, optima = optimal_flood_value(diamond, "A", "B")
    plan = make_plan(optima[0])
    keys = mint_link_keys(diamond, 6)
    run = run_flood(plan, keys)
    fresh = mint_link_keys(diamond, 6)
    index = VariableIndex(fresh.values())
    kb = KnowledgeBase(index.n_vars)
    ingest(kb, run.transcript, index)
    for (a, b), km in fresh.items():
        if "B" in (a, b):
            ingest(kb, km, index)
    for seg in run.shared:
        assert can_derive(kb, seg, index)
        assert derive_bits(kb, index.key_bit_exprs(seg)) == seg.bits


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

def test_audit_chain_intermediary_reads_end_key():
    net, keys, transcript = chain_setup()
    fresh = mint_link_keys(net, 2)
    index = VariableIndex(fresh.values())
    end_exprs = index.key_bit_exprs(fresh[("A", "C")])  # the relayed key
    report = audit_run(
        transcript, fresh, AdversaryModel(TRUSTED, frozenset({"C"})), end_exprs, "A", "B"
    )
    assert report.compromised
    assert report.readers == ("coalition",)
    assert "k:A-C" in report.derivable_keys and "k:B-C" in report.derivable_keys


def test_audit_diamond_single_trusted_node_partial(diamond):
    _, optima = optimal_flood_value(diamond, "A", "B")
    plan = make_plan(optima[0])
    keys = mint_link_keys(diamond, 8)
    run = run_flood(plan, keys)
    fresh = mint_link_keys(diamond, 8)
    index = VariableIndex(fresh.values())
    report = audit_run(
        run.transcript,
        fresh,
        AdversaryModel(TRUSTED, frozenset({"C"})),
        concat_expression(run.shared, index),
        "A",
        "B",
    )
    assert not report.compromised  # C never sees the k_AD share
    assert "k:A-C" in report.derivable_keys
    assert "k:A-D" not in report.derivable_keys
    # C does read both pieces of k_AC, so the k_AC segments alone derive
    ac_segments = [s for s in run.shared if s.origin == "k:A-C"]
    coalition = KnowledgeBase(index.n_vars)
    ingest(coalition, run.transcript, index)
    for (a, b), km in fresh.items():
        if "C" in (a, b):
            ingest(coalition, km, index)
    assert can_derive(coalition, concat_expression(ac_segments, index))


def test_audit_xor_key_survives_single_dishonest_node():
    net = star_network(3)
    _, optima = optimal_flood_value(net, "A", "B")
    plan = make_plan(optima[0])
    keys = mint_link_keys(net, 3)
    run = run_flood(plan, keys)
    fresh = mint_link_keys(net, 3)
    index = VariableIndex(fresh.values())
    exprs = xor_expression(run.shared, index)
    for member in ("X0", "X1", "X2"):
        report = audit_run(
            run.transcript, fresh, AdversaryModel(DISHONEST, frozenset({member})),
            exprs, "A", "B",
        )
        assert not report.compromised


def test_audit_collective_bound_enforced():
    with pytest.raises(InputError, match="bound"):
        AdversaryModel(COLLECTIVE, frozenset({"C", "D"}), bound=1)
    model = AdversaryModel(COLLECTIVE, frozenset({"C"}), bound=1)
    assert model.bound == 1


def test_audit_report_document_round_trips_to_json():
    net, keys, transcript = chain_setup()
    fresh = mint_link_keys(net, 2)
    index = VariableIndex(fresh.values())
    report = audit_run(
        transcript, fresh, AdversaryModel(TRUSTED, frozenset()),
        index.key_bit_exprs(fresh[("A", "C")]), "A", "B",
    )
    doc = report.to_document()
    assert doc["compromised"] is False
    assert doc["total_variables"] == 16
    assert isinstance(report.to_json(), str)


def test_sink_completeness_on_random_runs():
    rng = random.Random(31)
    for _ in range(40):
        n_paths = rng.randint(1, 4)
        net = star_network(n_paths, bits=rng.randint(2, 16))
        _, optima = optimal_flood_value(net, "A", "B")
        plan = make_plan(optima[0])
        seed = rng.randint(0, 2**30)
        run = run_flood(plan, mint_link_keys(net, seed))
        fresh = mint_link_keys(net, seed)
        index = VariableIndex(fresh.values())
        kb = KnowledgeBase(index.n_vars)
        ingest(kb, run.transcript, index)
        for (a, b), km in fresh.items():
            if "B" in (a, b):
                ingest(kb, km, index)
        rate_exprs = concat_expression(run.shared, index)
        assert can_derive(kb, rate_exprs)
        assert derive_bits(kb, rate_exprs) == assemble_rate(run.shared)
        xor_exprs = xor_expression(run.shared, index)
        assert derive_bits(kb, xor_exprs) == assemble_secure(run.shared)


# ---------------------------------------------------------------------------
# protocol-level audits reproduce the formula-level oracle
# ---------------------------------------------------------------------------

def multi_hop_star(path_lengths, bits=4):
    """Disjoint chains A - x..x - B with the given interior lengths."""
    links = {}
    paths = []
    counter = 0
    for length in path_lengths:
        interior = [f"N{counter + j}" for j in range(length)]
        counter += length
        chain = ["A", *interior, "B"]
        for u, v in zip(chain, chain[1:]):
            links[(u, v)] = bits
        paths.append(tuple(interior))
    return build_network(links), paths


@pytest.mark.parametrize("mode", [BROADCASTING, POOLING])
def test_audit_aggregation_reproduces_oracle(mode):
    rng = random.Random(77)
    for _ in range(6):
        n_paths = rng.randint(2, 3)
        lengths = [rng.randint(1, 2) for _ in range(n_paths)]
        net, paths = multi_hop_star(lengths)
        interiors = [n for p in paths for n in p]
        trust = {n: rng.choice([0.3, 0.7, 0.9]) for n in interiors}

        _, optima = optimal_flood_value(net, "A", "B")
        plan = make_plan(optima[0])
        run = run_flood(plan, mint_link_keys(net, 55))
        fresh = mint_link_keys(net, 55)
        index = VariableIndex(fresh.values())
        exprs = xor_expression(run.shared, index)

        audit_mode = DISHONEST if mode == BROADCASTING else TRUSTED
        total = 0.0
        for honest in itertools.product([True, False], repeat=len(interiors)):
            state = dict(zip(interiors, honest))
            weight = 1.0
            for n in interiors:
                weight *= trust[n] if state[n] else 1.0 - trust[n]
            members = frozenset(n for n in interiors if not state[n])
            report = audit_run(
                run.transcript, fresh, AdversaryModel(audit_mode, members),
                exprs, "A", "B",
            )
            if report.compromised:
                total += weight

        assessment = TrustAssessment(
            paths=PathSet.from_paths(paths), node_trust=trust, adversary_mode=mode
        )
        assert total == pytest.approx(compromise_oracle(assessment), abs=1e-12)
