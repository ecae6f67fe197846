"""Exactly what each principal can derive from a transcript, over GF(2).

Every bit of every original link key is a GF(2) variable. A principal's
knowledge is the row space of the linear combinations it knows the
value of: its own key bits (unit vectors) plus one relation per
announced ciphertext bit (payload bit XOR pad bit = known value).
Since all announcements are XOR-linear, row reduction decides exactly
what is derivable; this is the protocol-level security oracle.

Knowledge bases are principal-local; audits of different adversary
sets can run concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import InputError
from .flood_engine import Bits, KeyMaterial, Transcript

TRUSTED = "trusted"
DISHONEST = "dishonest"
COLLECTIVE = "collective"
ADVERSARY_MODES = (TRUSTED, DISHONEST, COLLECTIVE)


@dataclass(frozen=True)
class AdversaryModel:
    """A coalition of nodes and how it behaves.

    Trusted members pool what they see but stay silent; dishonest
    members additionally broadcast all their key material to everyone.
    Collective is a trusted pool with an explicit size bound.
    """

    mode: str
    members: frozenset[str] = frozenset()
    bound: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ADVERSARY_MODES:
            raise InputError(f"unknown adversary mode {self.mode!r}")
        if self.mode == COLLECTIVE:
            if self.bound is None:
                raise InputError("collective adversaries need a bound")
            if len(self.members) > self.bound:
                raise InputError(
                    f"{len(self.members)} members exceed the collective bound {self.bound}"
                )


class VariableIndex:
    """Assigns one GF(2) variable to every bit of every original link key."""

    def __init__(self, keys: Iterable[KeyMaterial]):
        self._base: dict[str, int] = {}
        self._sizes: dict[str, int] = {}
        offset = 0
        for key in sorted(keys, key=lambda k: k.key_id):
            if key.origin != key.key_id or key.origin_start != 0:
                raise InputError(
                    f"{key.key_id!r} is a derived segment; index original keys only"
                )
            if key.key_id in self._base:
                raise InputError(f"duplicate key id {key.key_id!r}")
            self._base[key.key_id] = offset
            self._sizes[key.key_id] = key.length
            offset += key.length
        self.n_vars = offset

    def var(self, origin: str, bit: int) -> int:
        if origin not in self._base:
            raise InputError(f"unknown key {origin!r}")
        if not 0 <= bit < self._sizes[origin]:
            raise InputError(f"bit {bit} out of range for key {origin!r}")
        return self._base[origin] + bit

    def key_bit_exprs(self, key: KeyMaterial) -> list[int]:
        """One single-variable expression per bit of the key or segment."""
        return [
            1 << self.var(key.origin, key.origin_start + i) for i in range(key.length)
        ]


class KnowledgeBase:
    """Row space (reduced echelon form) of known GF(2) linear combinations."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self._mask = (1 << n_vars) - 1
        self._aug = 1 << n_vars
        self._rows: dict[int, int] = {}  # pivot bit -> augmented row

    @property
    def rank(self) -> int:
        return len(self._rows)

    def copy(self) -> "KnowledgeBase":
        clone = KnowledgeBase(self.n_vars)
        clone._rows = dict(self._rows)
        return clone

    def _reduce(self, row: int) -> int:
        coeffs = row & self._mask
        while coeffs:
            pivot = coeffs.bit_length() - 1
            other = self._rows.get(pivot)
            if other is None:
                break
            row ^= other
            coeffs = row & self._mask
        return row

    def add_relation(self, coeffs: int, value: int) -> None:
        """Learn that the XOR of the flagged variables equals `value`."""
        row = (coeffs & self._mask) | (self._aug if value & 1 else 0)
        row = self._reduce(row)
        coeffs = row & self._mask
        if coeffs == 0:
            if row:
                raise InputError("inconsistent facts: 0 = 1")
            return
        pivot = coeffs.bit_length() - 1
        for p, r in list(self._rows.items()):
            if (r >> pivot) & 1:
                self._rows[p] = r ^ row
        self._rows[pivot] = row

    def add_key(self, key: KeyMaterial, index: VariableIndex) -> None:
        """Learn every bit of a key the principal owns."""
        for i in range(key.length):
            coeffs = 1 << index.var(key.origin, key.origin_start + i)
            self.add_relation(coeffs, key.bits.bit(i))

    def add_transcript(self, transcript: Transcript, index: VariableIndex) -> None:
        """Learn the public relation each announced ciphertext bit defines."""
        for ann in transcript:
            pad_lo, _ = ann.pad_range
            offset = 0
            for (origin, start, stop) in ann.payload:
                for i in range(stop - start):
                    coeffs = (1 << index.var(origin, start + i)) | (
                        1 << index.var(ann.pad_key_id, pad_lo + offset + i)
                    )
                    self.add_relation(coeffs, ann.ciphertext.bit(offset + i))
                offset += stop - start

    def derives(self, coeffs: int) -> bool:
        return (self._reduce(coeffs & self._mask) & self._mask) == 0

    def value_of(self, coeffs: int) -> int | None:
        row = self._reduce(coeffs & self._mask)
        if row & self._mask:
            return None
        return 1 if row & self._aug else 0


def ingest(kb: KnowledgeBase, facts, index: VariableIndex) -> KnowledgeBase:
    """Add keys, transcripts, or iterables thereof to a knowledge base."""
    if isinstance(facts, KeyMaterial):
        kb.add_key(facts, index)
    elif isinstance(facts, Transcript):
        kb.add_transcript(facts, index)
    elif isinstance(facts, (str, bytes)):
        raise InputError(f"cannot ingest {type(facts).__name__}")
    elif isinstance(facts, Iterable):
        for fact in facts:
            ingest(kb, fact, index)
    else:
        raise InputError(f"cannot ingest {type(facts).__name__}")
    return kb


def can_derive(
    kb: KnowledgeBase, target: KeyMaterial | Sequence[int], index: VariableIndex | None = None
) -> bool:
    """True iff every bit of the target lies in the knowledge base's row space."""
    if isinstance(target, KeyMaterial):
        if index is None:
            raise InputError("deriving a key target needs the variable index")
        exprs: Sequence[int] = index.key_bit_exprs(target)
    else:
        exprs = target
    return all(kb.derives(e) for e in exprs)


def derive_bits(kb: KnowledgeBase, exprs: Sequence[int]) -> Bits | None:
    """Evaluate per-bit expressions; None when any bit is underdetermined."""
    value = 0
    for i, e in enumerate(exprs):
        bit = kb.value_of(e)
        if bit is None:
            return None
        value |= bit << i
    return Bits(len(exprs), value)


def concat_expression(segments: Sequence[KeyMaterial], index: VariableIndex) -> list[int]:
    """Per-bit expressions of the rate-assembled (concatenated) key."""
    out: list[int] = []
    for seg in segments:
        out.extend(index.key_bit_exprs(seg))
    return out


def xor_expression(segments: Sequence[KeyMaterial], index: VariableIndex) -> list[int]:
    """Per-bit expressions of the security-assembled (XORed) key."""
    if not segments:
        raise InputError("nothing to assemble")
    min_len = min(s.length for s in segments)
    out = []
    for i in range(min_len):
        coeffs = 0
        for seg in segments:
            coeffs ^= 1 << index.var(seg.origin, seg.origin_start + i)
        out.append(coeffs)
    return out


@dataclass
class AuditReport:
    """Verdict of one adversary audit of one protocol run."""

    adversary: AdversaryModel
    compromised: bool
    readers: tuple[str, ...]
    derivable_keys: tuple[str, ...]
    coalition_rank: int
    total_variables: int

    def to_document(self) -> dict:
        return {
            "adversary": {
                "mode": self.adversary.mode,
                "members": sorted(self.adversary.members),
                "bound": self.adversary.bound,
            },
            "compromised": self.compromised,
            "readers": list(self.readers),
            "derivable_keys": list(self.derivable_keys),
            "coalition_rank": self.coalition_rank,
            "total_variables": self.total_variables,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=2)


def audit_run(
    transcript: Transcript,
    keys: Mapping[tuple[str, str], KeyMaterial],
    adversary: AdversaryModel,
    final_key_exprs: Sequence[int],
    source: str,
    sink: str,
) -> AuditReport:
    """Can the adversary (or, if it broadcasts, any bystander) read the key?

    The coalition pools its members' key material with the transcript.
    In dishonest mode the members' keys additionally enter every other
    principal's knowledge (worst-case broadcast timing), and the key
    counts as compromised if any remaining intermediary can then read
    it. End users are not counted as readers.
    """
    index = VariableIndex(keys.values())
    base = KnowledgeBase(index.n_vars)
    base.add_transcript(transcript, index)

    def keys_of(node: str) -> list[KeyMaterial]:
        return [km for (a, b), km in sorted(keys.items()) if node in (a, b)]

    members = sorted(adversary.members)
    coalition = base.copy()
    for m in members:
        for km in keys_of(m):
            coalition.add_key(km, index)

    readers: list[str] = []
    if can_derive(coalition, final_key_exprs):
        readers.append("coalition")

    if adversary.mode == DISHONEST:
        broadcast = [km for m in members for km in keys_of(m)]
        interior = sorted(
            {n for (a, b) in keys for n in (a, b)} - {source, sink} - set(members)
        )
        for node in interior:
            kb = base.copy()
            for km in keys_of(node):
                kb.add_key(km, index)
            for km in broadcast:
                kb.add_key(km, index)
            if can_derive(kb, final_key_exprs):
                readers.append(node)

    derivable = tuple(
        km.key_id
        for _, km in sorted(keys.items())
        if can_derive(coalition, index.key_bit_exprs(km))
    )
    return AuditReport(
        adversary=adversary,
        compromised=bool(readers),
        readers=tuple(readers),
        derivable_keys=derivable,
        coalition_rank=coalition.rank,
        total_variables=index.n_vars,
    )
