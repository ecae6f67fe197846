"""Executes the XOR-announcement flooding protocol.

Key material moves through the network only as public announcements of
payload XOR pad, where the pad is the announcing node's unused key on
the outbound link. Pads are consumed bit-by-bit and never reused (the
one-time-pad discipline); payload provenance is tracked back to the
original link keys so transcripts can be decoded and audited.

A protocol run is single-threaded and deterministic for a fixed seed;
independent runs share no state.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from heapq import heapify, heappop, heappush
from typing import Iterable, Mapping, Sequence

from .errors import InputError, KeyfloodError
from .flow_routing import FloodingPlan
from .topology import edge_key


@dataclass(frozen=True)
class Bits:
    """Immutable bitstring; bit i of the string is (value >> i) & 1."""

    length: int
    value: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise InputError("negative bit length")
        if not (0 <= self.value < (1 << self.length) if self.length else self.value == 0):
            raise InputError("bit value out of range for declared length")

    def __len__(self) -> int:
        return self.length

    @classmethod
    def from01(cls, s: str) -> "Bits":
        value = 0
        for i, ch in enumerate(s):
            if ch == "1":
                value |= 1 << i
            elif ch != "0":
                raise InputError(f"bad bit character {ch!r}")
        return cls(len(s), value)

    def to01(self) -> str:
        return "".join("1" if (self.value >> i) & 1 else "0" for i in range(self.length))

    @classmethod
    def zeros(cls, n: int) -> "Bits":
        return cls(n, 0)

    @classmethod
    def random(cls, rng: random.Random, n: int) -> "Bits":
        return cls(n, rng.getrandbits(n) if n else 0)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise InputError("bit index out of range")
        return (self.value >> i) & 1

    def cut(self, start: int, stop: int) -> "Bits":
        if not (0 <= start <= stop <= self.length):
            raise InputError("bad slice bounds")
        n = stop - start
        return Bits(n, (self.value >> start) & ((1 << n) - 1))

    def xor(self, other: "Bits") -> "Bits":
        if self.length != other.length:
            raise InputError(
                f"length mismatch: {self.length} vs {other.length} bits"
            )
        return Bits(self.length, self.value ^ other.value)

    def concat(self, other: "Bits") -> "Bits":
        return Bits(self.length + other.length, self.value | (other.value << self.length))

    @classmethod
    def join(cls, parts: Iterable["Bits"]) -> "Bits":
        out = cls.zeros(0)
        for p in parts:
            out = out.concat(p)
        return out

    def hex(self) -> str:
        """Byte-packed hex; bit 0 is the most significant bit of byte 0."""
        nbytes = (self.length + 7) // 8
        buf = bytearray(nbytes)
        for i in range(self.length):
            if (self.value >> i) & 1:
                buf[i // 8] |= 0x80 >> (i % 8)
        return buf.hex()

    @classmethod
    def from_hex(cls, s: str, length: int) -> "Bits":
        buf = bytes.fromhex(s)
        if len(buf) != (length + 7) // 8:
            raise InputError("hex length does not match declared bit count")
        value = 0
        for i in range(length):
            if buf[i // 8] & (0x80 >> (i % 8)):
                value |= 1 << i
        return cls(length, value)


@dataclass
class KeyMaterial:
    """A key (or key segment) shared by the two owners of one link.

    `origin`/`origin_start` trace every segment back to the original
    link key it was cut from; consumption is always a prefix, so
    `used_bits` is the per-bit usage flag in compressed form.
    """

    key_id: str
    owner_pair: tuple[str, str]
    bits: Bits
    origin: str = ""
    origin_start: int = 0
    used_bits: int = 0
    _splits: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        if not self.origin:
            self.origin = self.key_id

    @property
    def length(self) -> int:
        return self.bits.length

    @property
    def remaining(self) -> int:
        return self.bits.length - self.used_bits

    def consume_prefix(self, n: int) -> "KeyMaterial":
        """Cut the next n unused bits off as a new segment and mark them used."""
        if n < 0:
            raise InputError("negative segment length")
        if self.used_bits + n > self.length:
            raise InputError(
                f"over-length request: {n} bits from key {self.key_id!r} "
                f"with {self.remaining} unused"
            )
        start = self.used_bits
        seg = KeyMaterial(
            key_id=f"{self.key_id}/{self._splits}",
            owner_pair=self.owner_pair,
            bits=self.bits.cut(start, start + n),
            origin=self.origin,
            origin_start=self.origin_start + start,
        )
        self.used_bits += n
        self._splits += 1
        return seg

    def slice_view(self, start: int, stop: int) -> "KeyMaterial":
        """Read-only sub-segment; does not consume anything."""
        return KeyMaterial(
            key_id=f"{self.key_id}[{start}:{stop}]",
            owner_pair=self.owner_pair,
            bits=self.bits.cut(start, stop),
            origin=self.origin,
            origin_start=self.origin_start + start,
        )


def split_key(key: KeyMaterial, lengths: Sequence[int]) -> list[KeyMaterial]:
    """Cut contiguous segments of the given lengths off the key, in order.

    Consumed bits are marked; leftover bits stay available for later use.
    """
    if sum(lengths) > key.remaining:
        raise InputError(
            f"over-length request: {sum(lengths)} bits from key "
            f"{key.key_id!r} with {key.remaining} unused"
        )
    return [key.consume_prefix(n) for n in lengths]


def xor_keys(a: KeyMaterial, b: KeyMaterial) -> Bits:
    """Bitwise XOR of two equal-length keys."""
    return a.bits.xor(b.bits)


@dataclass(frozen=True)
class Announcement:
    """One public message: a payload segment XORed with an unused pad key.

    The payload descriptor and pad range are public metadata that carry
    no key bits; they let holders of the pad key decode the payload.
    """

    announcer: str
    pad_key_id: str
    pad_range: tuple[int, int]
    payload: tuple[tuple[str, int, int], ...]  # (origin key id, start, stop)
    ciphertext: Bits

    def __post_init__(self) -> None:
        pad_len = self.pad_range[1] - self.pad_range[0]
        payload_len = sum(stop - start for (_, start, stop) in self.payload)
        if not (pad_len == payload_len == self.ciphertext.length):
            raise InputError(
                "announcement lengths disagree: pad "
                f"{pad_len}, payload {payload_len}, ciphertext {self.ciphertext.length}"
            )

    def to_document(self) -> dict:
        return {
            "announcer": self.announcer,
            "pad_key_id": self.pad_key_id,
            "pad_range": list(self.pad_range),
            "payload_descriptor": [list(p) for p in self.payload],
            "length": self.ciphertext.length,
            "ciphertext": self.ciphertext.hex(),
        }

    @classmethod
    def from_document(cls, obj: Mapping) -> "Announcement":
        try:
            return cls(
                announcer=str(obj["announcer"]),
                pad_key_id=str(obj["pad_key_id"]),
                pad_range=(int(obj["pad_range"][0]), int(obj["pad_range"][1])),
                payload=tuple(
                    (str(o), int(s), int(e)) for o, s, e in obj["payload_descriptor"]
                ),
                ciphertext=Bits.from_hex(str(obj["ciphertext"]), int(obj["length"])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad announcement document: {exc}") from exc


@dataclass
class Transcript:
    """The full public record of one protocol run, in protocol time order."""

    announcements: list[Announcement] = field(default_factory=list)

    def append(self, ann: Announcement) -> None:
        self.announcements.append(ann)

    def __iter__(self):
        return iter(self.announcements)

    def __len__(self) -> int:
        return len(self.announcements)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(a.to_document(), sort_keys=True) + "\n" for a in self.announcements
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        out = cls()
        for line in text.splitlines():
            line = line.strip()
            if line:
                out.append(Announcement.from_document(json.loads(line)))
        return out


def assert_one_time_pad(transcript: Transcript) -> None:
    """Raise unless every pad bit is used in at most one announcement."""
    used: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for ann in transcript:
        lo, hi = ann.pad_range
        for (plo, phi) in used[ann.pad_key_id]:
            if lo < phi and plo < hi:
                raise KeyfloodError(
                    f"pad reuse on key {ann.pad_key_id!r}: "
                    f"[{lo},{hi}) overlaps [{plo},{phi})"
                )
        used[ann.pad_key_id].append((lo, hi))


def mint_link_keys(
    net, seed: int, lengths: Mapping[tuple[str, str], int] | None = None
) -> dict[tuple[str, str], KeyMaterial]:
    """Deterministic simulated key material for every usable link.

    Lengths default to the per-block bit count of each link. The same
    seed always produces byte-identical keys.
    """
    rng = random.Random(seed)
    out: dict[tuple[str, str], KeyMaterial] = {}
    for (a, b) in net.edges():
        n = lengths[(a, b)] if lengths is not None else net.link_bits(a, b)
        out[(a, b)] = KeyMaterial(
            key_id=f"k:{a}-{b}",
            owner_pair=(a, b),
            bits=Bits.random(rng, n),
        )
    return out


def run_linear_chain(keys: Sequence[KeyMaterial]) -> tuple[Bits, Transcript]:
    """Relay a key along a chain of links via XOR announcements.

    Each intermediary announces its inbound link key XOR its outbound
    link key, both truncated to the chain minimum; the end key is the
    first key truncated likewise, which both end users can reconstruct.
    """
    if not keys:
        raise InputError("chain of length 0")
    min_len = min(k.length for k in keys)
    transcript = Transcript()
    for prev, cur in zip(keys, keys[1:]):
        mid = set(prev.owner_pair) & set(cur.owner_pair)
        if len(mid) != 1:
            raise InputError(
                f"keys {prev.key_id!r} and {cur.key_id!r} do not share "
                "exactly one node; not a chain"
            )
        announcer = mid.pop()
        pad = cur.consume_prefix(min_len)
        plaintext = prev.bits.cut(0, min_len)
        transcript.append(
            Announcement(
                announcer=announcer,
                pad_key_id=pad.origin,
                pad_range=(pad.origin_start, pad.origin_start + min_len),
                payload=((prev.origin, prev.origin_start, prev.origin_start + min_len),),
                ciphertext=plaintext.xor(pad.bits),
            )
        )
    return keys[0].bits.cut(0, min_len), transcript


@dataclass
class FloodRun:
    """Everything one flooding run produced."""

    shared: list[KeyMaterial]      # segments the sink ends up holding
    designated: list[KeyMaterial]  # the source-side slices that were sent
    transcript: Transcript
    surplus: dict[str, int]        # per-node payload bits retained unconsumed
    plan: FloodingPlan


def _topological_order(arcs: Mapping[tuple[str, str], int]) -> list[str]:
    """Kahn's algorithm over positive-flow arcs, lexicographic tie-break."""
    nodes = sorted({u for (u, v) in arcs} | {v for (u, v) in arcs})
    indeg = {n: 0 for n in nodes}
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for (u, v), f in arcs.items():
        if f > 0:
            succ[u].append(v)
            indeg[v] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    heapify(ready)
    order: list[str] = []
    while ready:
        n = heappop(ready)
        order.append(n)
        for v in sorted(succ[n]):
            indeg[v] -= 1
            if indeg[v] == 0:
                heappush(ready, v)
    if len(order) != len(nodes):
        raise InputError("cyclic orientation: plan admits no topological order")
    return order


def _take_payload(queue: list[KeyMaterial], n: int) -> list[KeyMaterial]:
    """Pop n bits worth of payload segments off the queue, splitting at the boundary."""
    out: list[KeyMaterial] = []
    need = n
    while need > 0:
        if not queue:
            raise InputError("plan does not conserve flow: payload queue ran dry")
        seg = queue.pop(0)
        if seg.length <= need:
            out.append(seg)
            need -= seg.length
        else:
            out.append(seg.slice_view(0, need))
            queue.insert(0, seg.slice_view(need, seg.length))
            need = 0
    return out


def run_flood(
    plan: FloodingPlan, keys: Mapping[tuple[str, str], KeyMaterial]
) -> FloodRun:
    """Execute a flooding plan with the given link keys.

    Intermediaries act in topological order of the flow-carrying arcs.
    Each one concatenates the payload it decoded from earlier
    announcements followed by the key it shares directly with the
    source, splits that per the plan's output order, and announces each
    piece XORed with fresh bits of the matching outbound link key.
    """
    arcs = {arc: f for arc, f in plan.edge_flows.items() if f > 0}
    for (u, v), f in sorted(arcs.items()):
        if v == plan.source or u == plan.sink:
            raise InputError(f"arc {u}->{v} flows into the source or out of the sink")
        km = keys.get(edge_key(u, v))
        if km is None:
            raise InputError(f"no key material for link {edge_key(u, v)}")
        if km.remaining < f:
            raise InputError(
                f"insufficient key length on link {edge_key(u, v)}: "
                f"{km.remaining} bits unused, {f} planned"
            )

    inflow: dict[str, int] = defaultdict(int)
    outflow: dict[str, int] = defaultdict(int)
    for (u, v), f in arcs.items():
        outflow[u] += f
        inflow[v] += f
    for node in sorted(set(inflow) | set(outflow)):
        if node in (plan.source, plan.sink):
            continue
        if outflow[node] > inflow[node]:
            raise InputError(
                f"plan does not conserve flow at {node!r}: "
                f"{inflow[node]} in, {outflow[node]} out"
            )

    order = _topological_order(arcs)

    decoded: dict[str, list[KeyMaterial]] = defaultdict(list)
    direct: dict[str, KeyMaterial] = {}
    designated: list[KeyMaterial] = []
    for (u, v) in sorted(arcs):
        if u != plan.source:
            continue
        seg = keys[edge_key(u, v)].consume_prefix(arcs[(u, v)])
        designated.append(seg)
        direct[v] = seg

    transcript = Transcript()
    surplus: dict[str, int] = {}
    sink_shared: list[KeyMaterial] = []
    for node in order:
        if node in (plan.source, plan.sink):
            continue
        queue = list(decoded[node])
        if node in direct:
            queue.append(direct[node])
        targets = plan.output_orders.get(node, ())
        planned = sorted(v for (u, v) in arcs if u == node)
        if sorted(targets) != planned:
            raise InputError(
                f"output order for {node!r} does not cover its planned arcs"
            )
        for target in targets:
            f = arcs[(node, target)]
            subs = _take_payload(queue, f)
            pad = keys[edge_key(node, target)].consume_prefix(f)
            plaintext = Bits.join(s.bits for s in subs)
            transcript.append(
                Announcement(
                    announcer=node,
                    pad_key_id=pad.origin,
                    pad_range=(pad.origin_start, pad.origin_start + f),
                    payload=tuple(
                        (s.origin, s.origin_start, s.origin_start + s.length)
                        for s in subs
                    ),
                    ciphertext=plaintext.xor(pad.bits),
                )
            )
            if target == plan.sink:
                sink_shared.extend(subs)
            else:
                decoded[target].extend(subs)
        left = sum(s.length for s in queue)
        if left:
            surplus[node] = left

    if plan.sink in direct:
        sink_shared.append(direct[plan.sink])

    return FloodRun(
        shared=sink_shared,
        designated=designated,
        transcript=transcript,
        surplus=surplus,
        plan=plan,
    )


def reconstruct_sink_payload(
    transcript: Transcript,
    plan: FloodingPlan,
    sink_keys: Mapping[tuple[str, str], KeyMaterial],
) -> list[KeyMaterial]:
    """Decode the sink's share from the transcript and its own link keys.

    Pure function of public data plus the sink's keys; returns segments
    in the same order `run_flood` delivers them. Keys not owned by the
    sink are ignored, so passing the full key map is safe.
    """
    by_id = {
        km.key_id: km for km in sink_keys.values() if plan.sink in km.owner_pair
    }
    out: list[KeyMaterial] = []
    for ann in transcript:
        km = by_id.get(ann.pad_key_id)
        if km is None:
            continue
        pad_bits = km.bits.cut(*ann.pad_range)
        plain = ann.ciphertext.xor(pad_bits)
        offset = 0
        for (origin, start, stop) in ann.payload:
            n = stop - start
            out.append(
                KeyMaterial(
                    key_id=f"decoded:{origin}[{start}:{stop}]",
                    owner_pair=(plan.source, plan.sink),
                    bits=plain.cut(offset, offset + n),
                    origin=origin,
                    origin_start=start,
                )
            )
            offset += n
    direct_flow = plan.edge_flows.get((plan.source, plan.sink), 0)
    if direct_flow > 0:
        km = sink_keys.get(edge_key(plan.source, plan.sink))
        if km is None:
            raise InputError("plan uses a direct link the sink holds no key for")
        out.append(km.slice_view(0, direct_flow))
    return out


def assemble_rate(shared: Sequence[KeyMaterial]) -> Bits:
    """Concatenate shared keys in delivery order; length is the sum of lengths."""
    return Bits.join(k.bits for k in shared)


def assemble_secure(shared: Sequence[KeyMaterial]) -> Bits:
    """XOR all shared keys truncated to the shortest; length is that minimum."""
    if not shared:
        raise InputError("nothing to assemble")
    min_len = min(k.length for k in shared)
    out = Bits.zeros(min_len)
    for k in shared:
        out = out.xor(k.bits.cut(0, min_len))
    return out
