import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, build_network
from keyflood.auth_planner import (
    D_CONVENTION_COMM,
    D_CONVENTION_ROUND,
    RoundSizeError,
    SiatPlan,
    WcParams,
    flooded_siat,
    key_scaling,
    round_size_fixed_point,
    siat_plan,
    siat_plan_all,
    siat_table_csv,
    tag_length,
    wc_key_length,
    wc_key_length_exact,
)
from keyflood.errors import InputError
from keyflood.flow_routing import MnopError
from keyflood.topology import TrustTable, load_network
from keyflood.trust_calculus import trust_symmetric

PAPER_C = 1e-9
PAPER_G = 720_000.0
PAPER_F = 0.1


def eight_user():
    return load_network((DATA / "eight_user.json").read_text())


# ---------------------------------------------------------------------------
# Wegman-Carter sizing
# ---------------------------------------------------------------------------

def test_wc_worked_value():
    assert wc_key_length(PAPER_C, 50_563) == 2_179


def test_wc_closed_form_value():
    # 4 * (log2(4) + log2 log2 16) * log2 16 = 4 * (2 + 2) * 4
    assert wc_key_length(0.5, 16) == 64
    assert wc_key_length_exact(0.5, 16) == 64.0


def test_wc_domain_errors():
    with pytest.raises(InputError):
        wc_key_length(0.0, 100)
    with pytest.raises(InputError):
        wc_key_length(1.5, 100)
    with pytest.raises(InputError):
        wc_key_length(0.5, 2)


@given(
    st.floats(min_value=1e-12, max_value=0.5),
    st.floats(min_value=4, max_value=1e12),
)
@settings(max_examples=100)
def test_wc_monotone(c, d):
    base = wc_key_length_exact(c, d)
    assert wc_key_length_exact(c / 2, d) >= base  # smaller insecurity, longer key
    assert wc_key_length_exact(c, d * 2) >= base  # more traffic, longer key


def test_tag_length():
    assert tag_length(PAPER_C) == math.ceil(math.log2(2e9))
    assert tag_length(0.5) == 2


# ---------------------------------------------------------------------------
# round-size fixed point
# ---------------------------------------------------------------------------

def test_round_size_worked_value():
    a = round_size_fixed_point(PAPER_C, PAPER_G, PAPER_F)
    assert abs(a - 50_563) <= 1


def test_round_size_boundary_invariant():
    a = round_size_fixed_point(PAPER_C, PAPER_G, PAPER_F)
    assert wc_key_length_exact(PAPER_C, PAPER_G * a) <= PAPER_F * a
    assert wc_key_length_exact(PAPER_C, PAPER_G * (a - 1)) > PAPER_F * (a - 1)


def test_round_size_slack_constraint_small():
    a = round_size_fixed_point(0.5, 1.0, 0.99)
    assert a < 5_000
    assert wc_key_length_exact(0.5, a) <= 0.99 * a


def test_round_size_infeasible_below_cap():
    with pytest.raises(RoundSizeError, match="no round size"):
        round_size_fixed_point(PAPER_C, PAPER_G, 1e-6, cap=2**31)


def test_round_size_domain():
    with pytest.raises(InputError):
        round_size_fixed_point(PAPER_C, PAPER_G, 1.5)
    with pytest.raises(InputError):
        round_size_fixed_point(PAPER_C, 0.5, 0.1)


def test_wcparams_round_convention():
    wc = WcParams.plan_round(PAPER_C, PAPER_G, PAPER_F)
    assert wc.round_bits == 50_563
    assert wc.classical_bits == 50_563
    assert wc.key_bits == 2_179
    assert wc.tag_bits == tag_length(PAPER_C)
    assert wc.reuse_fraction == PAPER_F


def test_wcparams_comm_convention():
    wc = WcParams.plan_round(PAPER_C, PAPER_G, PAPER_F, d_convention=D_CONVENTION_COMM)
    assert wc.classical_bits == int(PAPER_G * wc.round_bits)
    # sizing against the full classical traffic lands near f*a
    assert wc.key_bits == pytest.approx(PAPER_F * wc.round_bits, rel=1e-3)
    with pytest.raises(InputError):
        WcParams.plan_round(PAPER_C, PAPER_G, PAPER_F, d_convention="bogus")


# ---------------------------------------------------------------------------
# SIAT plans
# ---------------------------------------------------------------------------

def test_siat_worked_example():
    net = eight_user()
    plan = siat_plan(net, "B", "A", "I", tag_bits=2_179, round_bits=50_563)
    assert plan.tag_transfer_seconds == pytest.approx(62.80, abs=0.01)
    assert plan.qkd_round_seconds == pytest.approx(1_773, abs=1)
    assert plan.trust_window_seconds == pytest.approx(1_836, abs=1)
    assert plan.rates[("A", "B")] == 45.94
    assert plan.rates[("B", "I")] == 34.70


def test_siat_symmetric_rates():
    net = build_network({("A", "X"): 10.0, ("B", "X"): 10.0, ("A", "B"): 10.0})
    plan = siat_plan(net, "X", "A", "B", tag_bits=100, round_bits=100)
    assert plan.trust_window_seconds == pytest.approx(2 * 100 / 10.0)


def test_siat_rates_scale_inversely():
    links = {("A", "X"): 10.0, ("B", "X"): 7.0, ("A", "B"): 5.0}
    single = siat_plan(build_network(links), "X", "A", "B", 100, 200)
    doubled = siat_plan(
        build_network({k: 2 * v for k, v in links.items()}), "X", "A", "B", 100, 200
    )
    assert doubled.trust_window_seconds == pytest.approx(single.trust_window_seconds / 2)


def test_siat_missing_links():
    net = build_network({("A", "X"): 10.0, ("B", "X"): 10.0})
    with pytest.raises(InputError, match="no quantum channel"):
        siat_plan(net, "X", "A", "B", 100, 100)
    net2 = build_network({("A", "X"): 10.0, ("A", "B"): 10.0})
    with pytest.raises(InputError, match="missing link"):
        siat_plan(net2, "X", "A", "B", 100, 100)


def test_siat_table_contains_worked_row():
    net = eight_user()
    rows = siat_plan_all(net, "I", tag_bits=2_179, round_bits=50_563)
    match = [r for r in rows if r.end_user == "A" and r.intermediary == "B"]
    assert len(match) == 1
    assert match[0].plan.trust_window_seconds == pytest.approx(1_836, abs=1)
    # fully connected sample: every pair is reachable via every intermediary
    assert all(r.plan is not None for r in rows)
    assert len(rows) == 7 * 6


def test_siat_table_error_marker():
    net = build_network(
        {("A", "X"): 10.0, ("B", "X"): 10.0, ("A", "B"): 5.0, ("A", "Y"): 10.0}
    )
    rows = siat_plan_all(net, "A", tag_bits=10, round_bits=10)
    by_pair = {(r.end_user, r.intermediary): r for r in rows}
    assert by_pair[("B", "X")].plan is not None
    assert by_pair[("B", "Y")].plan is None  # Y shares no link with B
    assert by_pair[("B", "Y")].error
    text = siat_table_csv(rows)
    assert "end_user,intermediary,tag_seconds,round_seconds,window_seconds,error" in text


# ---------------------------------------------------------------------------
# scaling law
# ---------------------------------------------------------------------------

def test_scaling_collusion_free_line():
    for n in range(3, 101):
        assert key_scaling(n, 0) == 2 * n - 3


def test_scaling_matches_formula_terms():
    for c_a in range(0, 6):
        for n in range(c_a + 2, c_a + 30):
            seed_clique = (c_a + 2) * (c_a + 1) // 2
            joiners = (n - c_a - 2) * (c_a + 2)
            assert key_scaling(n, c_a) == seed_clique + joiners


def test_scaling_seed_set_only():
    for c_a in range(0, 5):
        n = c_a + 2
        assert key_scaling(n, c_a) == (c_a + 2) * (c_a + 1) // 2


def test_scaling_example():
    assert key_scaling(8, 1) == 18


def test_scaling_domain():
    with pytest.raises(InputError):
        key_scaling(3, 3)
    with pytest.raises(InputError):
        key_scaling(2, -1)


# ---------------------------------------------------------------------------
# flooded bootstrap orchestration
# ---------------------------------------------------------------------------

def six_peer_setup(trust_value=0.99):
    links = {}
    for peer in ("C", "D", "E", "F", "G", "H"):
        links[("A", peer)] = 40.0
        links[("B", peer)] = 40.0
    links[("A", "B")] = 30.0  # quantum channel the end users will use
    net = build_network(links)
    ta = TrustTable("A", {p: trust_value for p in ("C", "D", "E", "F", "G", "H")})
    tb = TrustTable("B", {p: trust_value for p in ("C", "D", "E", "F", "G", "H")})
    return net, ta, tb


def test_flooded_six_peers_picks_pairable_partition():
    net, ta, tb = six_peer_setup()
    wc = WcParams.plan_round(PAPER_C, PAPER_G, PAPER_F)
    result = flooded_siat(net, "A", "B", ta, tb, t_min=0.9925, min_subset=3, wc=wc)
    assert result.mutual_peers == ("C", "D", "E", "F", "G", "H")
    assert len(result.paths) == 6
    assert result.partition.subsets == ((0, 1, 2), (3, 4, 5))
    assert result.trust == pytest.approx(trust_symmetric(2, 3, 0.99), abs=1e-12)
    assert abs(result.trust - result.oracle_trust) <= 1e-12
    assert result.rate == pytest.approx(2 * 40.0)
    # window: slowest per-path tag transfer plus the shared QKD round
    assert result.trust_window_seconds == pytest.approx(
        wc.key_bits / 40.0 + wc.round_bits / 30.0
    )


def test_flooded_fully_trusted_takes_max_rate():
    net, ta, tb = six_peer_setup(trust_value=1.0)
    result = flooded_siat(net, "A", "B", ta, tb, t_min=0.9999, min_subset=2)
    assert len(result.partition.subsets) == 3  # three pairs, best possible rate
    assert result.trust == 1.0


def test_flooded_too_few_peers():
    links = {("A", "C"): 10.0, ("B", "C"): 10.0, ("A", "D"): 10.0, ("B", "D"): 10.0,
             ("A", "B"): 10.0}
    net = build_network(links)
    ta = TrustTable("A", {"C": 0.9, "D": 0.9})
    tb = TrustTable("B", {"C": 0.9, "D": 0.9})
    with pytest.raises(MnopError) as err:
        flooded_siat(net, "A", "B", ta, tb, t_min=0.5, min_subset=3)
    assert err.value.available == 2


def test_flooded_uses_minimum_of_the_two_tables():
    net, ta, _ = six_peer_setup()
    tb = TrustTable("B", {p: 0.5 for p in ("C", "D", "E", "F", "G", "H")})
    result = flooded_siat(net, "A", "B", ta, tb, t_min=0.0, min_subset=3)
    assert all(p.trusts == (0.5,) for p in result.paths)


def test_flooded_requires_end_user_channel():
    links = {("A", "C"): 10.0, ("B", "C"): 10.0}
    net = build_network(links)
    with pytest.raises(InputError, match="no quantum channel"):
        flooded_siat(net, "A", "B", TrustTable("A", {"C": 1.0}),
                     TrustTable("B", {"C": 1.0}), t_min=0.5)
