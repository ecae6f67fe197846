"""End-to-end trust arithmetic for multipath XOR key relay.

A relayed key is compromised when enough paths leak. With dishonest
(broadcasting) intermediaries that means all paths but at most one
contain a leak; with a silent pool it means every path does. The
closed forms here are validated against `compromise_oracle`, an
exhaustive enumeration over honesty assignments that is the ground
truth for every formula, including the known-defective literal form
kept behind `compromise_probability_closed`.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import InfeasibleError, InputError
from .flow_routing import PathSet

BROADCASTING = "broadcasting"
POOLING = "pooling"
ORACLE_EXACT_LIMIT = 20
MAX_PARTITION_PATHS = 12

LITERAL_FORM_NOTE = (
    "the literal closed form omits the trust weighting on the lone honest "
    "path in its second term and so double-counts the all-dishonest event; "
    "the enumeration oracle is authoritative (two single-node paths at "
    "trust 0.9: literal 0.21 vs oracle 0.19)"
)


class EnumerationLimitError(InputError):
    """Exact oracle refused: too many interior nodes to enumerate."""


class PartitionInfeasibleError(InfeasibleError):
    """No partition reaches the requested trust threshold."""

    def __init__(self, t_min: float, best_trust: float):
        self.t_min = t_min
        self.best_trust = best_trust
        super().__init__(
            f"no feasible partition: best achievable trust {best_trust:.12g} "
            f"< required {t_min:.12g}"
        )


@dataclass(frozen=True)
class TrustAssessment:
    """A set of relay paths plus per-node trust and the adversary model."""

    paths: PathSet
    node_trust: Mapping[str, float]
    adversary_mode: str = BROADCASTING

    def __post_init__(self) -> None:
        if self.adversary_mode not in (BROADCASTING, POOLING):
            raise InputError(f"unknown adversary mode {self.adversary_mode!r}")
        if not self.paths.paths:
            raise InputError("empty path set")
        for p in self.paths.paths:
            for node in p:
                t = self.node_trust.get(node)
                if t is None:
                    raise InputError(f"missing trust entry for node {node!r}")
                if not 0.0 <= t <= 1.0:
                    raise InputError(f"trust for node {node!r} outside [0, 1]")

    def path_values(self) -> tuple[float, ...]:
        """Per-path trust: the product over that path's interior nodes.

        Cross-point nodes contribute their trust to every path they sit on.
        """
        return tuple(
            math.prod(self.node_trust[n] for n in p) for p in self.paths.paths
        )


def compromise_probability_closed(assess: TrustAssessment) -> float:
    """Literal closed-form compromise probability, kept for comparison only.

    Evaluates, as commonly quoted, the sum of "every path leaks" and
    "every path but one leaks" terms plus, for each cross-point, the
    collation term T_xx * prod over paths avoiding it of (1 - T_i).
    The second term lacks the honest-path trust factor, which
    double-counts the all-dishonest event; decisions should use
    `trust_xor` / `compromise_oracle` instead. Clamped to 1.
    """
    if assess.adversary_mode != BROADCASTING:
        raise InputError("the closed compromise form models broadcasting adversaries")
    values = assess.path_values()
    leak = [1.0 - t for t in values]
    p = math.prod(leak)
    for k in range(len(values)):
        p += math.prod(leak[i] for i in range(len(values)) if i != k)
    for xx in sorted(assess.paths.cross_points):
        avoiding = [
            leak[i] for i, path in enumerate(assess.paths.paths) if xx not in path
        ]
        p += assess.node_trust[xx] * math.prod(avoiding)
    return min(p, 1.0)


def xor_trust_from_path_values(values: Sequence[float]) -> float:
    """Trust that an XOR over non-overlapping paths stays secret.

    The key leaks when all paths, or all but one, contain a dishonest
    node, so t = 1 - (prod(1-T_i) + sum_k T_k prod_{i!=k}(1-T_i)).
    """
    if not values:
        raise InputError("no paths")
    leak = [1.0 - t for t in values]
    p = math.prod(leak)
    for k, t_k in enumerate(values):
        p += t_k * math.prod(leak[i] for i in range(len(values)) if i != k)
    return 1.0 - p


def trust_xor(assess: TrustAssessment) -> float:
    """Closed-form end-to-end trust of the XOR-assembled key."""
    if assess.paths.cross_points:
        raise InputError(
            "paths overlap; no closed form applies, use compromise_oracle"
        )
    return xor_trust_from_path_values(assess.path_values())


def partitioned_trust_from_values(subsets: Sequence[Sequence[float]]) -> float:
    """Trust of a concatenation of per-subset XOR keys: the product of
    each subset's XOR trust, since every piece must stay secret."""
    return math.prod(xor_trust_from_path_values(s) for s in subsets)


def trust_symmetric(m: int, n_prime: int, trust: float) -> float:
    """Uniform-case partition trust: m subsets of n' equally trusted paths.

    Each subset survives when at most n'-2 of its paths leak, i.e.
    sum_{k=0}^{n'-2} C(n',k) T^(n'-k) (1-T)^k, and the m subsets must
    all survive.
    """
    if m < 1 or n_prime < 1:
        raise InputError("subset count and size must be positive")
    if not 0.0 <= trust <= 1.0:
        raise InputError("trust outside [0, 1]")
    subset = sum(
        math.comb(n_prime, k) * trust ** (n_prime - k) * (1.0 - trust) ** k
        for k in range(n_prime - 1)
    )
    return subset**m


# ---------------------------------------------------------------------------
# Exhaustive honesty-assignment oracle (ground truth for the closed forms)
# ---------------------------------------------------------------------------

def _oracle_compromised_mask(
    assess: TrustAssessment, mode: str, masks: np.ndarray, node_index: dict[str, int]
) -> np.ndarray:
    """Boolean vector: is the key readable under each dishonesty mask."""
    paths = assess.paths.paths
    n_paths = len(paths)
    path_masks = [
        sum(1 << node_index[n] for n in p) for p in paths
    ]
    affected = np.zeros(masks.shape, dtype=np.int16)
    for pm in path_masks:
        affected += (masks & pm) != 0
    if mode == POOLING:
        return affected == n_paths
    compromised = affected >= n_paths - 1
    # an honest cross-point collates its own paths; if every path that
    # avoids it leaks, it can read the key
    for xx in sorted(assess.paths.cross_points):
        avoiding = [pm for p, pm in zip(paths, path_masks) if xx not in p]
        others = np.zeros(masks.shape, dtype=np.int16)
        for pm in avoiding:
            others += (masks & pm) != 0
        honest = ((masks >> node_index[xx]) & 1) == 0
        compromised |= honest & (others == len(avoiding))
    return compromised


def compromise_oracle(
    assess: TrustAssessment,
    mode: str | None = None,
    max_nodes: int = ORACLE_EXACT_LIMIT,
) -> float:
    """Exact compromise probability by enumerating every honesty assignment.

    Each interior node is independently honest with its trust
    probability. Shared (cross-point) nodes count in every path they
    occupy. Refuses beyond `max_nodes` nodes; use
    `compromise_oracle_monte_carlo` there.
    """
    mode = mode or assess.adversary_mode
    if mode not in (BROADCASTING, POOLING):
        raise InputError(f"unknown adversary mode {mode!r}")
    nodes = assess.paths.interior_nodes()
    n = len(nodes)
    if n > max_nodes:
        raise EnumerationLimitError(
            f"{n} interior nodes exceed the exact enumeration limit "
            f"({max_nodes}); use compromise_oracle_monte_carlo"
        )
    node_index = {node: i for i, node in enumerate(nodes)}
    masks = np.arange(1 << n, dtype=np.int64)
    weights = np.ones(masks.shape, dtype=np.float64)
    for node, i in node_index.items():
        t = assess.node_trust[node]
        dishonest = ((masks >> i) & 1).astype(bool)
        weights *= np.where(dishonest, 1.0 - t, t)
    compromised = _oracle_compromised_mask(assess, mode, masks, node_index)
    return float(weights[compromised].sum())


@dataclass(frozen=True)
class OracleEstimate:
    """Monte Carlo estimate of the compromise probability."""

    probability: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int


def compromise_oracle_monte_carlo(
    assess: TrustAssessment,
    mode: str | None = None,
    samples: int = 200_000,
    seed: int = 0,
    z: float = 1.96,
) -> OracleEstimate:
    """Seeded sampling fallback for large node sets, with a binomial CI."""
    mode = mode or assess.adversary_mode
    if mode not in (BROADCASTING, POOLING):
        raise InputError(f"unknown adversary mode {mode!r}")
    nodes = assess.paths.interior_nodes()
    node_index = {node: i for i, node in enumerate(nodes)}
    rng = np.random.default_rng(seed)
    masks = np.zeros(samples, dtype=np.int64)
    for node, i in node_index.items():
        dishonest = rng.random(samples) < (1.0 - assess.node_trust[node])
        masks |= dishonest.astype(np.int64) << i
    hits = _oracle_compromised_mask(assess, mode, masks, node_index)
    p = float(hits.mean())
    half = z * math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return OracleEstimate(
        probability=p,
        ci_low=max(0.0, p - half),
        ci_high=min(1.0, p + half),
        samples=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Rate/trust partition optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelayPath:
    """One non-overlapping relay route: its key rate and interior trusts."""

    label: str
    rate: float
    trusts: tuple[float, ...]

    @property
    def trust(self) -> float:
        return math.prod(self.trusts)


@dataclass(frozen=True)
class Partition:
    """Paths grouped into XOR subsets whose outputs are concatenated."""

    subsets: tuple[tuple[int, ...], ...]
    subset_trusts: tuple[float, ...]
    trust: float
    rate: float


@dataclass
class PartitionSearch:
    best: Partition
    feasible: tuple[Partition, ...]
    table: tuple[Partition, ...]


def iter_set_partitions(n: int, min_size: int = 1) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All set partitions of range(n) with every block at least min_size.

    Canonical form: blocks ordered by smallest member, members sorted
    (which the construction yields for free). Underfull branches are
    pruned when the remaining items cannot fill them.
    """
    if n == 0:
        yield ()
        return
    blocks: list[list[int]] = []

    def rec(i: int):
        if i == n:
            if all(len(b) >= min_size for b in blocks):
                yield tuple(tuple(b) for b in blocks)
            return
        deficit = sum(max(0, min_size - len(b)) for b in blocks)
        if deficit > n - i:
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1)
            b.pop()
        blocks.append([i])
        yield from rec(i + 1)
        blocks.pop()

    yield from rec(0)


def evaluate_partition(
    paths: Sequence[RelayPath], subsets: Sequence[Sequence[int]]
) -> Partition:
    """Trust and rate of one grouping: each subset XORs down to its
    minimum-rate key, the subset keys are concatenated."""
    subset_trusts = tuple(
        xor_trust_from_path_values([paths[i].trust for i in s]) for s in subsets
    )
    rate = sum(min(paths[i].rate for i in s) for s in subsets)
    return Partition(
        subsets=tuple(tuple(s) for s in subsets),
        subset_trusts=subset_trusts,
        trust=math.prod(subset_trusts),
        rate=rate,
    )


def optimize_partition(
    paths: Sequence[RelayPath], t_min: float, min_subset: int = 3
) -> PartitionSearch:
    """Best-rate grouping of paths whose end-to-end trust reaches t_min.

    Enumerates every set partition with subsets of at least `min_subset`
    paths; rate is the sum of per-subset minimum rates, trust the
    product of per-subset XOR trusts. Ties fall to higher trust, then
    to the lexicographically first subset listing.
    """
    if not paths:
        raise InputError("no paths to partition")
    if len(paths) > MAX_PARTITION_PATHS:
        raise InputError(
            f"{len(paths)} paths exceed the partition enumeration limit "
            f"({MAX_PARTITION_PATHS})"
        )
    if min_subset < 1:
        raise InputError("min_subset must be at least 1")
    table = [
        evaluate_partition(paths, subsets)
        for subsets in iter_set_partitions(len(paths), min_subset)
    ]
    if not table:
        raise PartitionInfeasibleError(t_min, 0.0)
    table.sort(key=lambda p: (-p.rate, -p.trust, p.subsets))
    feasible = tuple(p for p in table if p.trust >= t_min)
    if not feasible:
        raise PartitionInfeasibleError(t_min, max(p.trust for p in table))
    return PartitionSearch(best=feasible[0], feasible=feasible, table=tuple(table))


def partition_table_csv(table: Sequence[Partition], note: str = "") -> str:
    """CSV of partitions: listing, trust, rate (the feasibility table)."""
    buf = io.StringIO()
    if note:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf)
    writer.writerow(["partition", "trust", "rate"])
    for p in table:
        listing = " | ".join(",".join(str(i) for i in s) for s in p.subsets)
        writer.writerow([listing, f"{p.trust:.12g}", f"{p.rate:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Rate/trust frontier for the uniform single-hop scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontierPoint:
    """Achievable (rate, trust) combination for N uniform paths."""

    rate: int        # number of concatenated subset keys, m
    group_size: int  # paths XORed per subset, n'
    trust: float


def trust_rate_frontier(n_paths: int, trust_value: float) -> list[FrontierPoint]:
    """All factorizations m * n' = N with n' >= 2 and their trusts.

    The maximum rate per required trust level (the frontier) falls out
    by filtering these points, since trust decreases as m grows.
    """
    if n_paths < 2:
        raise InputError("need at least 2 paths for any XOR grouping")
    points = []
    for n_prime in range(2, n_paths + 1):
        if n_paths % n_prime == 0:
            m = n_paths // n_prime
            points.append(
                FrontierPoint(
                    rate=m,
                    group_size=n_prime,
                    trust=trust_symmetric(m, n_prime, trust_value),
                )
            )
    points.sort(key=lambda p: p.rate)
    return points


def frontier_csv(
    n_paths: int, trust_grid: Sequence[float], note: str = ""
) -> str:
    """CSV of frontier points over a grid of per-node trust values."""
    buf = io.StringIO()
    if note:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf)
    writer.writerow(["node_trust", "rate", "group_size", "total_trust"])
    for t in trust_grid:
        for point in trust_rate_frontier(n_paths, t):
            writer.writerow(
                [f"{t:.6g}", point.rate, point.group_size, f"{point.trust:.12g}"]
            )
    return buf.getvalue()
