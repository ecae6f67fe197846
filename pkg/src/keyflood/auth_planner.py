"""Authentication bootstrap planning: WC sizing, SIAT windows, scaling law.

Covers the arithmetic around getting two users their first shared
authentication key: how long a Wegman-Carter key must be for a given
insecurity and communication volume, how large a QKD round has to be so
a fixed fraction of it can fund the next round's authentication, how
long intermediaries must be trusted (the SIAT window), how the number
of pre-shared keys scales with network size, and the combined
flooded-SIAT orchestration that trades rate against trust.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InfeasibleError, InputError
from .flow_routing import MnopError, PathSet, max_disjoint_paths
from .topology import Network, TrustTable, edge_key, merge_trust
from .trust_calculus import (
    BROADCASTING,
    Partition,
    PartitionSearch,
    RelayPath,
    TrustAssessment,
    compromise_oracle,
    optimize_partition,
)

D_CONVENTION_ROUND = "round"  # size the transferred key against the round length
D_CONVENTION_COMM = "comm"    # size it against the full classical traffic g*a
D_CONVENTIONS = (D_CONVENTION_ROUND, D_CONVENTION_COMM)

DEFAULT_ROUND_CAP = 1 << 31


class RoundSizeError(InfeasibleError):
    """No round size below the cap satisfies the reuse constraint."""


def wc_key_length_exact(insecurity: float, classical_bits: float) -> float:
    """Required Wegman-Carter key length, un-rounded.

    s = 4 (log2(2/c) + log2 log2 d) log2 d for insecurity c and d bits
    of authenticated classical communication.
    """
    if not 0.0 < insecurity < 1.0:
        raise InputError("insecurity must lie in (0, 1)")
    if classical_bits < 4:
        raise InputError("classical communication must be at least 4 bits")
    log_d = math.log2(classical_bits)
    return 4.0 * (math.log2(2.0 / insecurity) + math.log2(log_d)) * log_d


def wc_key_length(insecurity: float, classical_bits: float) -> int:
    """Required Wegman-Carter key length in whole bits (nearest integer)."""
    return round(wc_key_length_exact(insecurity, classical_bits))


def tag_length(insecurity: float) -> int:
    """Tag bits: ceil(log2(2/c))."""
    if not 0.0 < insecurity < 1.0:
        raise InputError("insecurity must lie in (0, 1)")
    return math.ceil(math.log2(2.0 / insecurity))


def round_size_fixed_point(
    insecurity: float,
    comm_ratio: float,
    reuse_fraction: float,
    cap: int = DEFAULT_ROUND_CAP,
) -> int:
    """Smallest round size a whose reuse fraction funds its own authentication.

    Finds the least integer a with wc_key_length_exact(c, g*a) <= f*a,
    where g is the classical bits sent per key bit. The comparison uses
    the exact (real-valued) key length so the boundary is not distorted
    by rounding.
    """
    if not 0.0 < reuse_fraction < 1.0:
        raise InputError("reuse fraction must lie in (0, 1)")
    if comm_ratio < 1.0:
        raise InputError("communication ratio must be at least 1")

    def satisfied(a: int) -> bool:
        return wc_key_length_exact(insecurity, comm_ratio * a) <= reuse_fraction * a

    lo = max(1, math.ceil(4.0 / comm_ratio))
    hi = lo
    while not satisfied(hi):
        hi *= 2
        if hi > cap:
            raise RoundSizeError(
                f"no round size up to {cap} satisfies the reuse constraint "
                f"(c={insecurity:g}, g={comm_ratio:g}, f={reuse_fraction:g})"
            )
    if satisfied(lo):
        return lo
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if satisfied(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class WcParams:
    """One consistent set of Wegman-Carter sizing figures."""

    insecurity: float      # c
    classical_bits: int    # d
    comm_ratio: float      # g
    round_bits: int        # a
    tag_bits: int          # b = ceil(log2(2/c))
    key_bits: int          # s
    reuse_fraction: float  # f

    @classmethod
    def plan_round(
        cls,
        insecurity: float,
        comm_ratio: float,
        reuse_fraction: float,
        d_convention: str = D_CONVENTION_ROUND,
        cap: int = DEFAULT_ROUND_CAP,
    ) -> "WcParams":
        """Solve the round size, then size the transferred key.

        `d_convention` picks what counts as the authenticated volume d
        when sizing the key: the round length itself ("round", the
        worked-example convention) or the full classical traffic g*a
        ("comm").
        """
        if d_convention not in D_CONVENTIONS:
            raise InputError(f"unknown d convention {d_convention!r}")
        a = round_size_fixed_point(insecurity, comm_ratio, reuse_fraction, cap=cap)
        d = a if d_convention == D_CONVENTION_ROUND else int(comm_ratio * a)
        return cls(
            insecurity=insecurity,
            classical_bits=d,
            comm_ratio=comm_ratio,
            round_bits=a,
            tag_bits=tag_length(insecurity),
            key_bits=wc_key_length(insecurity, d),
            reuse_fraction=reuse_fraction,
        )


@dataclass
class SiatPlan:
    """Timings for one inaugural-authentication bootstrap via one node.

    The intermediary only needs to be trusted for the window: the time
    to deliver the key to both end users (bounded by its slower link)
    plus one full QKD round between them.
    """

    intermediary: str
    end_users: tuple[str, str]
    tag_transfer_seconds: float
    qkd_round_seconds: float
    trust_window_seconds: float
    rates: dict[tuple[str, str], float]


def siat_plan(
    net: Network,
    intermediary: str,
    user_a: str,
    user_b: str,
    tag_bits: int,
    round_bits: int,
) -> SiatPlan:
    """Trust window for bootstrapping user_a/user_b through one node.

    The intermediary sends the s-bit key to both users simultaneously,
    bounded by the slower of its two links; the users then run one
    a-bit QKD round over their own link.
    """
    for v in (intermediary, user_a, user_b):
        if not net.has_node(v):
            raise InputError(f"node {v!r} not in network")
    if len({intermediary, user_a, user_b}) != 3:
        raise InputError("intermediary and end users must be three distinct nodes")
    r_xa = net.rate(intermediary, user_a)
    r_xb = net.rate(intermediary, user_b)
    r_ab = net.rate(user_a, user_b)
    if r_xa <= 0:
        raise InputError(f"missing link {intermediary}-{user_a}")
    if r_xb <= 0:
        raise InputError(f"missing link {intermediary}-{user_b}")
    if r_ab <= 0:
        raise InputError(f"no quantum channel between end users {user_a}-{user_b}")
    tag_seconds = tag_bits / min(r_xa, r_xb)
    round_seconds = round_bits / r_ab
    return SiatPlan(
        intermediary=intermediary,
        end_users=(user_a, user_b),
        tag_transfer_seconds=tag_seconds,
        qkd_round_seconds=round_seconds,
        trust_window_seconds=tag_seconds + round_seconds,
        rates={
            edge_key(intermediary, user_a): r_xa,
            edge_key(intermediary, user_b): r_xb,
            edge_key(user_a, user_b): r_ab,
        },
    )


@dataclass
class SiatTableRow:
    end_user: str
    intermediary: str
    plan: SiatPlan | None
    error: str = ""


def siat_plan_all(
    net: Network, new_user: str, tag_bits: int, round_bits: int
) -> list[SiatTableRow]:
    """Trust windows for every (end user, intermediary) pair of a new user.

    Rows where a needed link is missing carry an error marker instead
    of a plan.
    """
    if not net.has_node(new_user):
        raise InputError(f"node {new_user!r} not in network")
    rows: list[SiatTableRow] = []
    for end_user in net.nodes:
        if end_user == new_user:
            continue
        for intermediary in net.nodes:
            if intermediary in (new_user, end_user):
                continue
            try:
                plan = siat_plan(net, intermediary, new_user, end_user, tag_bits, round_bits)
                rows.append(SiatTableRow(end_user, intermediary, plan))
            except InputError as exc:
                rows.append(SiatTableRow(end_user, intermediary, None, error=str(exc)))
    return rows


def siat_table_csv(rows: Sequence[SiatTableRow], note: str = "") -> str:
    """CSV of per-pair trust windows (seconds, 0.01 s display precision)."""
    buf = io.StringIO()
    if note:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf)
    writer.writerow(
        ["end_user", "intermediary", "tag_seconds", "round_seconds", "window_seconds", "error"]
    )
    for row in rows:
        if row.plan is None:
            writer.writerow([row.end_user, row.intermediary, "", "", "", row.error])
        else:
            p = row.plan
            writer.writerow(
                [
                    row.end_user,
                    row.intermediary,
                    f"{p.tag_transfer_seconds:.2f}",
                    f"{p.qkd_round_seconds:.2f}",
                    f"{p.trust_window_seconds:.2f}",
                    "",
                ]
            )
    return buf.getvalue()


def key_scaling(n_users: int, adversary_bound: int) -> int:
    """Pre-shared keys needed for a fully connected authenticated network.

    n_k = (c+2)(c+1)/2 + (n-c-2)(c+2) for an adversary coalition of at
    most c nodes; with c = 0 this is the 2n-3 line.
    """
    if adversary_bound < 0:
        raise InputError("adversary bound must be nonnegative")
    if n_users <= adversary_bound + 1:
        raise InputError("need more users than adversary_bound + 1")
    c = adversary_bound
    return (c + 2) * (c + 1) // 2 + (n_users - c - 2) * (c + 2)


@dataclass
class FloodedSiat:
    """Result of the combined flooded inaugural-authentication bootstrap."""

    end_users: tuple[str, str]
    mutual_peers: tuple[str, ...]
    path_set: PathSet
    paths: tuple[RelayPath, ...]
    partition: Partition
    trust: float
    oracle_trust: float
    rate: float
    trust_window_seconds: float
    wc: WcParams
    search: PartitionSearch


def _path_edges(path: Sequence[str], source: str, sink: str) -> list[tuple[str, str]]:
    chain = [source, *path, sink]
    return [edge_key(u, v) for u, v in zip(chain, chain[1:])]


def flooded_siat(
    net: Network,
    user_a: str,
    user_b: str,
    trust_a: TrustTable,
    trust_b: TrustTable,
    t_min: float,
    min_subset: int = 3,
    wc: WcParams | None = None,
) -> FloodedSiat:
    """Bootstrap two users through every disjoint mutual-peer route at once.

    Both users announce their peers; disjoint paths through the mutual
    ones each carry an independent key share (one SIAT per path), the
    shares are grouped by the rate/trust optimizer against t_min, and
    trust of each node is the minimum of the two users' opinions.
    """
    for v in (user_a, user_b):
        if not net.has_node(v):
            raise InputError(f"node {v!r} not in network")
    if user_a == user_b:
        raise InputError("end users must differ")
    if net.rate(user_a, user_b) <= 0:
        raise InputError(f"no quantum channel between end users {user_a}-{user_b}")
    wc = wc if wc is not None else WcParams.plan_round(1e-9, 720_000.0, 0.1)

    peers = tuple(
        x
        for x in net.nodes
        if x not in (user_a, user_b)
        and net.rate(user_a, x) > 0
        and net.rate(user_b, x) > 0
    )
    if not peers:
        raise MnopError(min_subset, 0)
    merged = merge_trust(trust_a, trust_b)

    # the inaugural key must not ride the not-yet-authenticated direct link
    subnet = net.subgraph((user_a, user_b, *peers), drop_links=[(user_a, user_b)])
    path_set = max_disjoint_paths(subnet, user_a, user_b)
    if len(path_set.paths) < min_subset:
        raise MnopError(min_subset, len(path_set.paths))

    relay_paths: list[RelayPath] = []
    windows: list[float] = []
    round_seconds = wc.round_bits / net.rate(user_a, user_b)
    for path in path_set.paths:
        edges = _path_edges(path, user_a, user_b)
        rate = min(net.rate(*e) for e in edges)
        trusts = tuple(merged.trust_of(n) for n in path)
        relay_paths.append(
            RelayPath(label="-".join(path) if path else "direct", rate=rate, trusts=trusts)
        )
        windows.append(wc.key_bits / rate + round_seconds)

    search = optimize_partition(relay_paths, t_min=t_min, min_subset=min_subset)
    best = search.best

    # re-check the chosen grouping against the enumeration oracle
    oracle_trust = 1.0
    for subset in best.subsets:
        sub_paths = PathSet.from_paths([path_set.paths[i] for i in subset])
        assess = TrustAssessment(
            paths=sub_paths,
            node_trust={n: merged.trust_of(n) for p in sub_paths.paths for n in p},
            adversary_mode=BROADCASTING,
        )
        oracle_trust *= 1.0 - compromise_oracle(assess)

    return FloodedSiat(
        end_users=(user_a, user_b),
        mutual_peers=peers,
        path_set=path_set,
        paths=tuple(relay_paths),
        partition=best,
        trust=best.trust,
        oracle_trust=oracle_trust,
        rate=best.rate,
        trust_window_seconds=max(windows),
        wc=wc,
        search=search,
    )
