"""Max-flow routing for flooding: orientations, optimal plans, disjoint paths.

A flooding routing strategy assigns a direction to every usable link
(edges touching the source point away from it, edges touching the sink
point into it) and the key length it can deliver equals the max flow of
the resulting digraph. The best strategy over all orientations equals
the undirected max flow, which this module uses as an internal oracle.

All flows are computed on whole bits (floored per-block capacities) so
key splitting downstream stays exact. Every function here is pure.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import InfeasibleError, InputError
from .topology import Network, edge_key

DEFAULT_ORIENTATION_LIMIT = 20


class OrientationLimitError(InputError):
    """Too many free edges to enumerate orientations exhaustively."""


class MnopError(InfeasibleError):
    """Fewer internally vertex-disjoint paths exist than were requested."""

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(
            f"only {available} internally vertex-disjoint path(s) exist, "
            f"{required} required"
        )


@dataclass(frozen=True)
class DirectedNetwork:
    """One flooding routing strategy: every usable link given a direction."""

    base: Network
    source: str
    sink: str
    orientation: tuple[tuple[str, str], ...]  # (tail, head) per link, sorted by edge name

    def __post_init__(self) -> None:
        if self.source == self.sink:
            raise InputError("source and sink must differ")
        for v in (self.source, self.sink):
            if not self.base.has_node(v):
                raise InputError(f"node {v!r} not in network")
        expected = set(self.base.edges())
        seen: set[tuple[str, str]] = set()
        for tail, head in self.orientation:
            k = edge_key(tail, head)
            if k not in expected:
                raise InputError(f"orientation names unknown link {k}")
            if k in seen:
                raise InputError(f"orientation repeats link {k}")
            seen.add(k)
            if head == self.source or tail == self.sink:
                raise InputError(
                    f"arc {tail}->{head} violates source-out/sink-in orientation"
                )
        if seen != expected:
            missing = sorted(expected - seen)
            raise InputError(f"orientation misses link(s) {missing}")
        object.__setattr__(
            self, "orientation", tuple(sorted(self.orientation, key=lambda a: edge_key(*a)))
        )

    def arcs(self) -> dict[tuple[str, str], int]:
        """Directed arcs with their whole-bit capacities."""
        return {
            (t, h): self.base.link_bits(t, h)
            for (t, h) in self.orientation
        }


@dataclass(frozen=True)
class FlowResult:
    """A maximum flow: its value, per-arc flows, and a certifying min cut."""

    value: int
    edge_flows: dict[tuple[str, str], int]
    min_cut: tuple[frozenset[str], frozenset[str]]


@dataclass(frozen=True)
class PathSet:
    """Paths between two end users, stored as ordered interior node lists."""

    paths: tuple[tuple[str, ...], ...]
    cross_points: frozenset[str]

    @classmethod
    def from_paths(cls, paths: Sequence[Sequence[str]]) -> "PathSet":
        for p in paths:
            if len(set(p)) != len(p):
                raise InputError(f"path {tuple(p)} is not simple")
        counts = Counter(node for p in paths for node in set(p))
        cross = frozenset(n for n, c in counts.items() if c > 1)
        return cls(tuple(tuple(p) for p in paths), cross)

    def interior_nodes(self) -> tuple[str, ...]:
        return tuple(sorted({n for p in self.paths for n in p}))


@dataclass
class FloodingPlan:
    """An executable flooding strategy: orientation, per-arc bit flows,
    and the order in which each node addresses its outbound links."""

    source: str
    sink: str
    value: int
    orientation: tuple[tuple[str, str], ...]
    edge_flows: dict[tuple[str, str], int]
    output_orders: dict[str, tuple[str, ...]]

    def to_document(self) -> dict:
        return {
            "source": self.source,
            "sink": self.sink,
            "value": self.value,
            "orientation": [list(a) for a in self.orientation],
            "edge_flows": [[u, v, f] for (u, v), f in sorted(self.edge_flows.items())],
            "output_orders": {n: list(ts) for n, ts in sorted(self.output_orders.items())},
        }


def plan_from_document(obj: Mapping) -> FloodingPlan:
    """Parse and sanity-check a flooding plan document."""
    try:
        orientation = tuple((str(u), str(v)) for u, v in obj["orientation"])
        edge_flows = {(str(u), str(v)): int(f) for u, v, f in obj["edge_flows"]}
        output_orders = {
            str(n): tuple(str(t) for t in ts) for n, ts in obj["output_orders"].items()
        }
        plan = FloodingPlan(
            source=str(obj["source"]),
            sink=str(obj["sink"]),
            value=int(obj["value"]),
            orientation=orientation,
            edge_flows=edge_flows,
            output_orders=output_orders,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad plan document: {exc}") from exc
    arcs = set(plan.orientation)
    for arc, f in plan.edge_flows.items():
        if arc not in arcs:
            raise InputError(f"edge_flows names arc {arc} outside the orientation")
        if f < 0:
            raise InputError(f"edge_flows: negative flow on {arc}")
    return plan


# ---------------------------------------------------------------------------
# Core max-flow machinery (shortest augmenting paths, deterministic order)
# ---------------------------------------------------------------------------

def _edmonds_karp(
    nodes: Sequence, caps: Mapping[tuple, int], source, sink
) -> tuple[int, dict[tuple, int]]:
    """Breadth-first augmenting-path max flow.

    `caps` maps directed arcs to nonnegative integer capacities. Flow is
    kept as a net, skew-symmetric quantity so antiparallel arc pairs
    (the undirected construction) cancel automatically. Neighbors are
    visited in sorted order, making the result deterministic.
    """
    adj: dict = {v: set() for v in nodes}
    for (u, v) in caps:
        adj[u].add(v)
        adj[v].add(u)
    adj = {v: tuple(sorted(ws)) for v, ws in adj.items()}
    flow: dict[tuple, int] = {}

    def residual(u, v) -> int:
        return caps.get((u, v), 0) - flow.get((u, v), 0)

    value = 0
    while True:
        parent = {source: source}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and residual(u, v) > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        # bottleneck along the discovered shortest path
        bottleneck = None
        v = sink
        while v != source:
            u = parent[v]
            r = residual(u, v)
            bottleneck = r if bottleneck is None else min(bottleneck, r)
            v = u
        v = sink
        while v != source:
            u = parent[v]
            flow[(u, v)] = flow.get((u, v), 0) + bottleneck
            flow[(v, u)] = flow.get((v, u), 0) - bottleneck
            v = u
        value += bottleneck

    positive = {arc: f for arc, f in flow.items() if arc in caps and f > 0}
    return value, positive


def _find_directed_cycle(arcs: Mapping[tuple, int]) -> list | None:
    """First directed cycle (deterministic DFS order) among positive arcs."""
    succ: dict = {}
    for (u, v), f in arcs.items():
        if f > 0:
            succ.setdefault(u, []).append(v)
    succ = {u: sorted(vs) for u, vs in succ.items()}
    WHITE, GREY, BLACK = 0, 1, 2
    color = {u: WHITE for u in succ}
    for start in sorted(succ):
        if color.get(start, BLACK) != WHITE:
            continue
        stack = [(start, iter(succ.get(start, ())))]
        color[start] = GREY
        trail = [start]
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color.get(nxt, WHITE) == GREY:
                    return trail[trail.index(nxt):] + [nxt]
                if color.get(nxt, WHITE) == WHITE:
                    color[nxt] = GREY
                    trail.append(nxt)
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                trail.pop()
                stack.pop()
    return None


def _cancel_flow_cycles(flows: dict[tuple, int]) -> dict[tuple, int]:
    """Remove directed flow cycles; value and conservation are unchanged.

    Guarantees the positive-flow subgraph is acyclic so the plan always
    admits a topological execution order.
    """
    flows = dict(flows)
    while True:
        cycle = _find_directed_cycle(flows)
        if cycle is None:
            return {a: f for a, f in flows.items() if f > 0}
        arcs = list(zip(cycle, cycle[1:]))
        delta = min(flows[a] for a in arcs)
        for a in arcs:
            flows[a] -= delta
            if flows[a] == 0:
                del flows[a]


def _residual_source_side(
    nodes: Sequence, caps: Mapping[tuple, int], flows: Mapping[tuple, int], source
) -> frozenset:
    """Nodes reachable from the source in the residual graph."""
    net = dict(flows)
    for (u, v), f in flows.items():
        net[(v, u)] = net.get((v, u), 0) - f
    adj: dict = {v: set() for v in nodes}
    for (u, v) in caps:
        adj[u].add(v)
        adj[v].add(u)
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in sorted(adj.get(u, ())):
            if v not in seen and caps.get((u, v), 0) - net.get((u, v), 0) > 0:
                seen.add(v)
                queue.append(v)
    return frozenset(seen)


def _cut_capacity(caps: Mapping[tuple, int], side: frozenset) -> int:
    return sum(c for (u, v), c in caps.items() if u in side and v not in side)


def _solve(nodes: Sequence[str], caps: dict[tuple, int], source: str, sink: str) -> FlowResult:
    value, flows = _edmonds_karp(nodes, caps, source, sink)
    flows = _cancel_flow_cycles(flows)
    side = _residual_source_side(nodes, caps, flows, source)
    cut = _cut_capacity(caps, side)
    if cut != value:  # max-flow = min-cut certificate; violation is a bug
        raise RuntimeError(f"flow {value} does not match its min cut {cut}")
    other = frozenset(n for n in nodes if n not in side)
    return FlowResult(value=value, edge_flows=flows, min_cut=(side, other))


def max_flow(net: DirectedNetwork) -> FlowResult:
    """Maximum source-to-sink flow of one routing strategy.

    Shortest-augmenting-path (breadth-first) search; the min cut is the
    source side of residual reachability and certifies the value.
    """
    caps = {arc: c for arc, c in net.arcs().items() if c > 0}
    return _solve(net.base.nodes, caps, net.source, net.sink)


def undirected_max_flow(net: Network, source: str, sink: str) -> FlowResult:
    """Max flow of the undirected network (each link as an antiparallel arc pair).

    This equals the best flooding value over all orientations and serves
    as the internal correctness oracle for `optimal_flood_value`.
    """
    if source == sink:
        raise InputError("source and sink must differ")
    for v in (source, sink):
        if not net.has_node(v):
            raise InputError(f"node {v!r} not in network")
    caps: dict[tuple, int] = {}
    for (a, b) in net.edges():
        bits = net.link_bits(a, b)
        if bits > 0:
            caps[(a, b)] = bits
            caps[(b, a)] = bits
    result = _solve(net.nodes, caps, source, sink)
    # undirected cut capacity counts each link once; the directed count
    # already does so because only source-side-out arcs cross the cut
    return result


def enumerate_orientations(
    net: Network, source: str, sink: str, limit: int = DEFAULT_ORIENTATION_LIMIT
) -> Iterator[DirectedNetwork]:
    """Yield every flooding routing strategy, exactly 2**(free edges) of them.

    Edges touching the source or sink have forced directions; the
    remaining (intermediary) edges each take both. Deterministic order:
    a binary counter over the lexicographically sorted free edges, where
    bit 0 keeps the canonical low-to-high direction.
    """
    if source == sink:
        raise InputError("source and sink must differ")
    for v in (source, sink):
        if not net.has_node(v):
            raise InputError(f"node {v!r} not in network")
    forced: list[tuple[str, str]] = []
    free: list[tuple[str, str]] = []
    for (a, b) in net.edges():
        if a == source or b == source:
            forced.append((source, b if a == source else a))
        elif a == sink or b == sink:
            forced.append((a if b == sink else b, sink))
        else:
            free.append((a, b))
    if len(free) > limit:
        raise OrientationLimitError(
            f"{len(free)} intermediary edges exceed the enumeration limit "
            f"({limit}); use optimal_flood_value, which falls back to the "
            "undirected max-flow bound"
        )
    for mask in range(1 << len(free)):
        arcs = list(forced)
        for i, (a, b) in enumerate(free):
            arcs.append((b, a) if (mask >> i) & 1 else (a, b))
        yield DirectedNetwork(net, source, sink, tuple(arcs))


def optimal_flood_value(
    net: Network, source: str, sink: str, limit: int = DEFAULT_ORIENTATION_LIMIT
) -> tuple[int, list[DirectedNetwork]]:
    """Best flooding value over all orientations, with every argmax strategy.

    Verified against the undirected max flow on every call. Beyond the
    enumeration limit only the undirected value is returned, with an
    empty strategy list.
    """
    oracle = undirected_max_flow(net, source, sink).value
    free_count = sum(
        1 for (a, b) in net.edges() if source not in (a, b) and sink not in (a, b)
    )
    if free_count > limit:
        return oracle, []
    best = -1
    optima: list[DirectedNetwork] = []
    for directed in enumerate_orientations(net, source, sink, limit=limit):
        value = max_flow(directed).value
        if value > best:
            best, optima = value, [directed]
        elif value == best:
            optima.append(directed)
    if best != oracle:
        raise RuntimeError(
            f"orientation enumeration found {best} but the undirected "
            f"max flow is {oracle}"
        )
    return best, optima


def make_plan(
    directed: DirectedNetwork,
    flow: FlowResult | None = None,
    output_orders: Mapping[str, Sequence[str]] | None = None,
) -> FloodingPlan:
    """Turn a routing strategy into an executable plan.

    Output orders default to lexicographic target order per node; only
    flow-carrying arcs are listed.
    """
    flow = flow if flow is not None else max_flow(directed)
    positive = {arc: f for arc, f in flow.edge_flows.items() if f > 0}
    orders: dict[str, tuple[str, ...]] = {}
    for (u, v) in sorted(positive):
        orders.setdefault(u, ())
        orders[u] = orders[u] + (v,)
    if output_orders is not None:
        for node, targets in output_orders.items():
            targets = tuple(targets)
            if sorted(targets) != sorted(orders.get(node, ())):
                raise InputError(f"output order for {node!r} does not match its arcs")
            orders[node] = targets
    return FloodingPlan(
        source=directed.source,
        sink=directed.sink,
        value=flow.value,
        orientation=directed.orientation,
        edge_flows=positive,
        output_orders=orders,
    )


# ---------------------------------------------------------------------------
# Internally vertex-disjoint paths (unit node capacities via node splitting)
# ---------------------------------------------------------------------------

_IN, _OUT = 0, 1


def _vertex_disjoint_paths(net: Network, source: str, sink: str) -> list[tuple[str, ...]]:
    """All internally vertex-disjoint paths a max unit flow supports.

    Each interior node is split into an in/out pair of unit capacity, so
    the flow value equals the vertex connectivity between the end users.
    Paths come out shortest first with lexicographic tie-breaks and are
    returned as tuples of interior nodes.
    """
    if source == sink:
        raise InputError("source and sink must differ")
    for v in (source, sink):
        if not net.has_node(v):
            raise InputError(f"node {v!r} not in network")
    big = max(len(net.nodes), 1)
    caps: dict[tuple, int] = {}
    split_nodes = []
    for v in net.nodes:
        split_nodes += [(v, _IN), (v, _OUT)]
        caps[((v, _IN), (v, _OUT))] = big if v in (source, sink) else 1
    for (a, b) in net.edges():
        caps[((a, _OUT), (b, _IN))] = 1
        caps[((b, _OUT), (a, _IN))] = 1
    s, t = (source, _OUT), (sink, _IN)
    value, flows = _edmonds_karp(split_nodes, caps, s, t)
    flows = _cancel_flow_cycles(flows)

    paths: list[tuple[str, ...]] = []
    for _ in range(value):
        # shortest remaining flow path, lexicographic among equals
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in sorted(w for (x, w) in flows if x == u):
                if v not in parent and flows.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:  # decomposition shortfall would be a bug
            raise RuntimeError("flow decomposition lost a path")
        chain = [t]
        while parent[chain[-1]] is not None:
            chain.append(parent[chain[-1]])
        chain.reverse()
        for u, v in zip(chain, chain[1:]):
            flows[(u, v)] -= 1
            if flows[(u, v)] == 0:
                del flows[(u, v)]
        interior = tuple(
            v for (v, half) in chain if half == _IN and v not in (source, sink)
        )
        paths.append(interior)
    return paths


def find_mnops(net: Network, source: str, sink: str, required: int) -> PathSet:
    """`required` internally vertex-disjoint paths between two end users.

    The maximum available count equals the vertex connectivity between
    them; asking for more raises MnopError carrying that maximum.
    """
    if required < 1:
        raise InputError("required path count must be at least 1")
    paths = _vertex_disjoint_paths(net, source, sink)
    if len(paths) < required:
        raise MnopError(required, len(paths))
    return PathSet.from_paths(paths[:required])


def max_disjoint_paths(net: Network, source: str, sink: str) -> PathSet:
    """Every internally vertex-disjoint path a maximum unit flow supports."""
    return PathSet.from_paths(_vertex_disjoint_paths(net, source, sink))
