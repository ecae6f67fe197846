"""Network and trust-table models: JSON ingestion, validation, merging.

Loaded objects are treated as immutable and can be shared freely across
threads; every downstream operation is a pure function of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import InputError

UNITS = ("bps", "bits_per_block")


def edge_key(a: str, b: str) -> tuple[str, str]:
    """Canonical (sorted) name of the undirected link between two nodes."""
    return (a, b) if a <= b else (b, a)


@dataclass
class Network:
    """Undirected capacitated graph of users and key links.

    Capacities stay in the unit the source document declared (`unit`);
    `rate` converts to bits per second and `link_bits` to whole bits per
    planning block of `block_seconds`. A capacity of exactly 0 keeps the
    link in the document but makes it invisible to routing.
    """

    nodes: tuple[str, ...]
    links: dict[tuple[str, str], float]
    unit: str = "bps"
    block_seconds: float = 1.0

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for n in self.nodes:
            if not isinstance(n, str) or not n:
                raise InputError(f"nodes: bad node identifier {n!r}")
            if n in seen:
                raise InputError(f"nodes: duplicate node id {n!r}")
            seen.add(n)
        if self.unit not in UNITS:
            raise InputError(f"unit: unknown unit {self.unit!r}")
        if not (isinstance(self.block_seconds, (int, float)) and self.block_seconds > 0):
            raise InputError("block_seconds: must be a positive number")
        norm: dict[tuple[str, str], float] = {}
        for (a, b), cap in self.links.items():
            if a == b:
                raise InputError(f"links: self-loop {a!r}")
            if a not in seen or b not in seen:
                raise InputError(f"links: unknown node in link {a!r}-{b!r}")
            k = edge_key(a, b)
            if k in norm:
                raise InputError(f"links: duplicate link {k[0]!r}-{k[1]!r}")
            if not (isinstance(cap, (int, float)) and math.isfinite(cap) and cap >= 0):
                raise InputError(f"links: negative capacity on {k[0]!r}-{k[1]!r}")
            norm[k] = float(cap)
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes)))
        object.__setattr__(self, "links", dict(sorted(norm.items())))

    def has_node(self, v: str) -> bool:
        return v in self.nodes

    def capacity(self, a: str, b: str) -> float:
        """Raw capacity in the declared unit; 0.0 when the link is absent."""
        return self.links.get(edge_key(a, b), 0.0)

    def rate(self, a: str, b: str) -> float:
        """Link capacity in bits per second."""
        cap = self.capacity(a, b)
        if self.unit == "bps":
            return cap
        return cap / self.block_seconds

    def link_bits(self, a: str, b: str) -> int:
        """Whole key bits available on the link in one planning block."""
        cap = self.capacity(a, b)
        if self.unit == "bps":
            return math.floor(cap * self.block_seconds)
        return math.floor(cap)

    def edges(self, include_zero: bool = False) -> tuple[tuple[str, str], ...]:
        """Links in canonical sorted order; zero-capacity links dropped by default."""
        return tuple(k for k, cap in self.links.items() if include_zero or cap > 0)

    def neighbors(self, v: str) -> tuple[str, ...]:
        out = [b if a == v else a for (a, b) in self.edges() if v in (a, b)]
        return tuple(sorted(out))

    def subgraph(self, keep: Iterable[str], drop_links: Iterable[tuple[str, str]] = ()) -> "Network":
        """Induced subgraph on `keep`, optionally dropping named links."""
        keep_set = set(keep)
        dropped = {edge_key(a, b) for (a, b) in drop_links}
        links = {
            k: cap
            for k, cap in self.links.items()
            if k[0] in keep_set and k[1] in keep_set and k not in dropped
        }
        return Network(
            nodes=tuple(sorted(keep_set)),
            links=links,
            unit=self.unit,
            block_seconds=self.block_seconds,
        )

    def to_document(self) -> dict:
        return {
            "unit": self.unit,
            "block_seconds": self.block_seconds,
            "nodes": list(self.nodes),
            "links": [
                {"a": a, "b": b, "capacity": cap} for (a, b), cap in self.links.items()
            ],
        }


@dataclass
class TrustTable:
    """One user's subjective trust estimate T in [0, 1] for other nodes."""

    evaluator: str
    entries: dict[str, float]

    def __post_init__(self) -> None:
        for node, value in self.entries.items():
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise InputError(f"trust.{node}: value {value!r} outside [0, 1]")
        if self.evaluator in self.entries:
            raise InputError("trust: evaluator must not rate itself")
        self.entries = {k: float(v) for k, v in sorted(self.entries.items())}

    def trust_of(self, node: str) -> float:
        """Trust in `node`; unknown nodes are fully untrusted (0)."""
        return self.entries.get(node, 0.0)

    def to_document(self) -> dict:
        return {"evaluator": self.evaluator, "trust": dict(self.entries)}


@dataclass
class MergedTrust:
    """Entrywise-minimum combination of two users' trust tables."""

    entries: dict[str, float]

    def trust_of(self, node: str) -> float:
        return self.entries.get(node, 0.0)


def _parse_document(document: Any) -> Any:
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise InputError(f"document is not valid JSON: {exc}") from exc
    return document


def load_network(document: Any) -> Network:
    """Validate a network description document and build a Network.

    Accepts JSON text or an already-parsed mapping. Violations are
    reported with the path of the offending field.
    """
    obj = _parse_document(document)
    if not isinstance(obj, Mapping):
        raise InputError("root: expected a JSON object")
    if "unit" not in obj:
        raise InputError("unit: missing (one unit must be declared per file)")
    unit = obj["unit"]
    if unit not in UNITS:
        raise InputError(f"unit: unknown unit {unit!r} (expected one of {UNITS})")
    block_seconds = obj.get("block_seconds", 1.0)
    if not (isinstance(block_seconds, (int, float)) and block_seconds > 0):
        raise InputError("block_seconds: must be a positive number")

    raw_nodes = obj.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise InputError("nodes: expected a non-empty list")
    nodes: list[str] = []
    for i, n in enumerate(raw_nodes):
        if not isinstance(n, str) or not n:
            raise InputError(f"nodes[{i}]: bad node identifier {n!r}")
        if n in nodes:
            raise InputError(f"nodes[{i}]: duplicate node id {n!r}")
        nodes.append(n)

    raw_links = obj.get("links")
    if not isinstance(raw_links, list):
        raise InputError("links: expected a list")
    links: dict[tuple[str, str], float] = {}
    for i, entry in enumerate(raw_links):
        if not isinstance(entry, Mapping):
            raise InputError(f"links[{i}]: expected an object")
        for fieldname in ("a", "b", "capacity"):
            if fieldname not in entry:
                raise InputError(f"links[{i}].{fieldname}: missing")
        a, b, cap = entry["a"], entry["b"], entry["capacity"]
        if a not in nodes:
            raise InputError(f"links[{i}].a: unknown node {a!r}")
        if b not in nodes:
            raise InputError(f"links[{i}].b: unknown node {b!r}")
        if a == b:
            raise InputError(f"links[{i}]: self-loop {a!r}")
        if not (isinstance(cap, (int, float)) and math.isfinite(cap)):
            raise InputError(f"links[{i}].capacity: not a finite number")
        if cap < 0:
            raise InputError(f"links[{i}].capacity: negative capacity")
        k = edge_key(a, b)
        if k in links:
            raise InputError(f"links[{i}]: duplicate link {k[0]!r}-{k[1]!r}")
        links[k] = float(cap)

    return Network(nodes=tuple(nodes), links=links, unit=unit, block_seconds=float(block_seconds))


def load_trust(document: Any) -> TrustTable:
    """Validate a trust table document: {"evaluator": id, "trust": {id: T}}."""
    obj = _parse_document(document)
    if not isinstance(obj, Mapping):
        raise InputError("root: expected a JSON object")
    evaluator = obj.get("evaluator")
    if not isinstance(evaluator, str) or not evaluator:
        raise InputError("evaluator: missing or bad identifier")
    raw = obj.get("trust")
    if not isinstance(raw, Mapping):
        raise InputError("trust: expected an object of node -> value")
    entries: dict[str, float] = {}
    for node, value in raw.items():
        if not isinstance(node, str) or not node:
            raise InputError(f"trust: bad node identifier {node!r}")
        if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
            raise InputError(f"trust.{node}: value {value!r} outside [0, 1]")
        entries[node] = float(value)
    return TrustTable(evaluator=evaluator, entries=entries)


def merge_trust(t1: TrustTable | MergedTrust, t2: TrustTable | MergedTrust) -> MergedTrust:
    """Entrywise minimum over the nodes both tables cover.

    Commutative, associative and idempotent; the conservative rule for
    two end users pooling their opinions of shared intermediaries.
    """
    common = set(t1.entries) & set(t2.entries)
    if not common:
        raise InputError("no common nodes between trust tables")
    merged = {n: min(t1.entries[n], t2.entries[n]) for n in sorted(common)}
    return MergedTrust(entries=merged)
