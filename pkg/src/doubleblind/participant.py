"""Database operators: Alice, Bob, Carol.

A participant holds a private key (blinded generator pair, master
secret, PRF key), enrolls records through the authority's blinded
issuance, builds rerandomized comparison queries as a submitter, and
evaluates queries against its own rows as a responder.

The stored index of a record is g^(s_i * N): the party generator raised
to the per-slot exponent times the entity identifier. Neither factor is
recoverable from the index, yet two parties can test whether two indices
hide the same identifier with one pairing each.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from .authority import EntityRegistry, IssuanceRequest
from .groups import (
    GroupElement,
    Side,
    SideMismatchError,
    backend_from_params,
    element_from_text,
    element_to_text,
)

__all__ = [
    "ParticipantError",
    "EnrollmentError",
    "UnknownSlotError",
    "ParticipantKey",
    "IndexAttribute",
    "ComparisonQuery",
    "RecordRow",
    "RecordDatabase",
    "ScanResult",
    "EnrollmentState",
    "keygen",
    "derive_record_exponent",
    "derive_dimension_exponent",
    "begin_enrollment",
    "complete_enrollment",
    "enroll_record",
    "build_query",
    "query_with_blinding",
    "new_query_id",
    "respond_compare",
    "compare_with_exponent",
    "scan_for_match",
    "save_key",
    "load_key",
]


class ParticipantError(Exception):
    """Base class for participant-side protocol failures."""


class EnrollmentError(ParticipantError):
    """Issuance round-trip produced unusable material."""


class UnknownSlotError(ParticipantError):
    """A slot outside the database was referenced."""


@dataclass(frozen=True)
class ParticipantKey:
    """A party's private material.

    The two generators share one secret exponent over the canonical
    per-side generators. The master secret and PRF key never serialize
    into any wire message; per-record exponents are derived from the PRF
    key so that every stored index uses a different exponent.
    """

    backend: Any = field(compare=False, repr=False)
    generator_a: GroupElement = field(repr=False)
    generator_b: GroupElement = field(repr=False)
    master_secret: int = field(repr=False)
    prf_key: bytes = field(repr=False)

    def fingerprint(self) -> str:
        """Short public identifier derived from the generator pair."""
        material = self.backend.encode(self.generator_a) + self.backend.encode(
            self.generator_b
        )
        return hashlib.sha256(material).hexdigest()[:16]


@dataclass(frozen=True)
class IndexAttribute:
    """A record's encrypted identifier, stored on both source sides."""

    slot: int
    element_a: GroupElement
    element_b: GroupElement


@dataclass(frozen=True)
class ComparisonQuery:
    """The submitter's message pair: (g^(r*s_i), index^r) plus metadata.

    Both elements share one fresh blinding exponent r, never reused, so
    repeated queries about the same record are byte-level unlinkable.
    """

    query_id: str
    u1: GroupElement
    u2: GroupElement
    predicate: str


@dataclass(frozen=True)
class RecordRow:
    index: IndexAttribute
    payload: str


@dataclass(frozen=True)
class ScanResult:
    """Outcome of a linear database scan."""

    slot: Optional[int]
    duplicate: bool

    @property
    def matched(self) -> bool:
        return self.slot is not None


@dataclass(frozen=True)
class EnrollmentState:
    """Private half of an in-flight enrollment (blinding not yet undone)."""

    slot: int
    blinding: int
    record_exponent: int


def keygen(backend, rng) -> ParticipantKey:
    """Fresh party key: generator exponent, master secret, PRF key."""
    gen_exponent = backend.random_scalar(rng)
    master_secret = backend.random_scalar(rng)
    prf_key = rng.getrandbits(256).to_bytes(32, "big")
    return ParticipantKey(
        backend=backend,
        generator_a=backend.power(backend.generator(Side.SOURCE_A), gen_exponent),
        generator_b=backend.power(backend.generator(Side.SOURCE_B), gen_exponent),
        master_secret=master_secret,
        prf_key=prf_key,
    )


def _prf_scalar(key: ParticipantKey, domain: bytes, index: int) -> int:
    """Keyed PRF of an index, reduced into [1, order-1].

    Rejection-resampling via the counter keeps the output unbiased; the
    domain tag separates record slots from dimension indices.
    """
    order = key.backend.order
    nbits = order.bit_length()
    nbytes = (nbits + 7) // 8
    shift = nbytes * 8 - nbits
    counter = 0
    while True:
        message = b"%s:%d:%d" % (domain, index, counter)
        digest = hmac.new(key.prf_key, message, hashlib.sha256).digest()
        while len(digest) < nbytes:
            digest += hmac.new(key.prf_key, message + b":%d" % len(digest),
                               hashlib.sha256).digest()
        value = int.from_bytes(digest[:nbytes], "big") >> shift
        if 0 < value < order:
            return value
        counter += 1


def derive_record_exponent(key: ParticipantKey, slot: int) -> int:
    """Deterministic per-slot exponent s_i; distinct slots give distinct values."""
    if slot < 0:
        raise ValueError("record slots are non-negative")
    return _prf_scalar(key, b"slot", slot)


def derive_dimension_exponent(key: ParticipantKey, dimension: int) -> int:
    """Per-dimension exponent for multi-key indexing; separate PRF domain."""
    if dimension < 0:
        raise ValueError("dimension indices are non-negative")
    return _prf_scalar(key, b"dim", dimension)


def _fresh_blinding(backend, rng) -> int:
    """Blinding exponent, resampled while degenerate (r = 1 voids blinding)."""
    while True:
        r = backend.random_scalar(rng)
        if r != 1:
            return r


class RecordDatabase:
    """Slot-addressed rows of (index attribute, free-text payload).

    Rows never store identifiers, labels, or any private scalar. Slots
    are dense from zero; payloads are single-line, tab-free text.
    """

    def __init__(self, backend, owner_fingerprint: str):
        self.backend = backend
        self.owner_fingerprint = owner_fingerprint
        self.rows: list[RecordRow] = []

    def __len__(self) -> int:
        return len(self.rows)

    def next_slot(self) -> int:
        return len(self.rows)

    def append(self, index: IndexAttribute, payload: str) -> None:
        if index.slot != self.next_slot():
            raise ParticipantError(
                f"slot {index.slot} is not the next free entry ({self.next_slot()})"
            )
        if "\t" in payload or "\n" in payload:
            raise ParticipantError("payload must be single-line, tab-free text")
        self.rows.append(RecordRow(index, payload))

    def row(self, slot: int) -> RecordRow:
        if not 0 <= slot < len(self.rows):
            raise UnknownSlotError(f"no record at slot {slot}")
        return self.rows[slot]

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        lines = [self.backend.params_line(), f"fingerprint={self.owner_fingerprint}"]
        for row in self.rows:
            lines.append(
                "\t".join(
                    (
                        str(row.index.slot),
                        element_to_text(self.backend, row.index.element_a),
                        element_to_text(self.backend, row.index.element_b),
                        row.payload,
                    )
                )
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RecordDatabase":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        lines = [line for line in lines if line.strip()]
        if len(lines) < 2 or not lines[1].startswith("fingerprint="):
            raise ParticipantError(f"malformed database file: {path}")
        backend = backend_from_params(lines[0])
        db = cls(backend, lines[1].removeprefix("fingerprint="))
        for line in lines[2:]:
            fields = line.split("\t", 3)
            if len(fields) != 4:
                raise ParticipantError(f"malformed database row: {line!r}")
            slot = int(fields[0])
            index = IndexAttribute(
                slot,
                element_from_text(backend, fields[1]),
                element_from_text(backend, fields[2]),
            )
            db.append(index, fields[3])
        return db


# -- enrollment ---------------------------------------------------------------


def begin_enrollment(
    key: ParticipantKey, slot: int, label: str, rng
) -> tuple[EnrollmentState, IssuanceRequest]:
    """Blind both generators under a fresh exponent and form the issuance request."""
    blinding = _fresh_blinding(key.backend, rng)
    state = EnrollmentState(
        slot=slot,
        blinding=blinding,
        record_exponent=derive_record_exponent(key, slot),
    )
    request = IssuanceRequest(
        label=label,
        base_a=key.backend.power(key.generator_a, blinding),
        base_b=key.backend.power(key.generator_b, blinding),
    )
    return state, request


def complete_enrollment(
    key: ParticipantKey,
    state: EnrollmentState,
    raised_a: GroupElement,
    raised_b: GroupElement,
) -> IndexAttribute:
    """Unblind issued material into the record's index attribute.

    The blinding r cancels: (g^(r*N))^(s_i/r) = g^(s_i*N) on each side.
    """
    backend = key.backend
    if raised_a.side is not Side.SOURCE_A or raised_b.side is not Side.SOURCE_B:
        raise SideMismatchError("issued elements arrived on the wrong sides")
    for el in (raised_a, raised_b):
        if backend.is_identity(el):
            raise EnrollmentError("issuance corrupt: identity element received")
    unblind = state.record_exponent * backend.scalar_inverse(state.blinding)
    return IndexAttribute(
        slot=state.slot,
        element_a=backend.power(raised_a, unblind),
        element_b=backend.power(raised_b, unblind),
    )


def enroll_record(
    key: ParticipantKey,
    db: RecordDatabase,
    registry: EntityRegistry,
    label: str,
    payload: str,
    rng,
) -> IndexAttribute:
    """One-shot enrollment against a locally reachable authority.

    Picks the next free slot, runs the blinded issuance round trip, and
    appends the row. The database gains no trace of the label.
    """
    state, request = begin_enrollment(key, db.next_slot(), label, rng)
    raised_a, raised_b = registry.issue(request)
    index = complete_enrollment(key, state, raised_a, raised_b)
    db.append(index, payload)
    return index


# -- comparison ---------------------------------------------------------------


def new_query_id(rng) -> str:
    """Opaque correlation token for a query."""
    return "q-%016x" % rng.getrandbits(64)


def query_with_blinding(
    key: ParticipantKey,
    index: IndexAttribute,
    predicate: str,
    blinding: int,
    query_id: str,
) -> ComparisonQuery:
    """Assemble the comparison pair for an explicit blinding exponent."""
    backend = key.backend
    s_i = derive_record_exponent(key, index.slot)
    return ComparisonQuery(
        query_id=query_id,
        u1=backend.power(key.generator_a, blinding * s_i),
        u2=backend.power(index.element_a, blinding),
        predicate=predicate,
    )


def build_query(
    key: ParticipantKey, db: RecordDatabase, slot: int, predicate: str, rng
) -> ComparisonQuery:
    """Rerandomized query about one of the submitter's own records."""
    row = db.row(slot)
    return query_with_blinding(
        key, row.index, predicate, _fresh_blinding(key.backend, rng), new_query_id(rng)
    )


@lru_cache(maxsize=4096)
def _raised_generator_b(key: ParticipantKey, exponent: int) -> GroupElement:
    # memoized: a responder reuses g_b^t across many comparisons of one row
    return key.backend.power(key.generator_b, exponent)


def compare_with_exponent(
    key: ParticipantKey,
    exponent: int,
    element_b: GroupElement,
    query: ComparisonQuery,
) -> bool:
    """Core equality test: pair the query against one side-B element.

    True iff the identifier hidden in the query equals the one hidden in
    the element, by bilinearity:
      pair(u1, element) and pair(u2, g_b^t) agree exactly when the two
      identifiers cancel to the same target exponent.
    """
    backend = key.backend
    if query.u1.side is not Side.SOURCE_A or query.u2.side is not Side.SOURCE_A:
        raise SideMismatchError("query elements must live on source side A")
    if element_b.side is not Side.SOURCE_B:
        raise SideMismatchError("responder elements must live on source side B")
    b0 = backend.pair(query.u1, element_b)
    b1 = backend.pair(query.u2, _raised_generator_b(key, exponent))
    return b0 == b1


def respond_compare(
    key: ParticipantKey, row: IndexAttribute, query: ComparisonQuery
) -> bool:
    """Evaluate a received query against one local row."""
    return compare_with_exponent(
        key, derive_record_exponent(key, row.slot), row.element_b, query
    )


def scan_for_match(
    key: ParticipantKey, db: RecordDatabase, query: ComparisonQuery
) -> ScanResult:
    """Linear scan in slot order.

    Returns the lowest matching slot; additional matches (possible only
    when two rows were enrolled under one label) set the duplicate flag.
    """
    matches = [
        row.index.slot
        for row in db.rows
        if respond_compare(key, row.index, query)
    ]
    return ScanResult(matches[0] if matches else None, len(matches) > 1)


# -- key persistence ----------------------------------------------------------


def save_key(key: ParticipantKey, path: str | Path) -> None:
    backend = key.backend
    width = backend.scalar_width()
    lines = [
        backend.params_line(),
        element_to_text(backend, key.generator_a),
        element_to_text(backend, key.generator_b),
        key.master_secret.to_bytes(width, "big").hex(),
        key.prf_key.hex(),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_key(path: str | Path) -> ParticipantKey:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    lines = [line for line in lines if line.strip()]
    if len(lines) != 5:
        raise ParticipantError(f"malformed key file: {path}")
    backend = backend_from_params(lines[0])
    generator_a = element_from_text(backend, lines[1])
    generator_b = element_from_text(backend, lines[2])
    if generator_a.side is not Side.SOURCE_A or generator_b.side is not Side.SOURCE_B:
        raise ParticipantError("key file generators are on the wrong sides")
    master_secret = int(lines[3], 16)
    prf_key = bytes.fromhex(lines[4])
    if len(prf_key) != 32:
        raise ParticipantError("PRF key must be 32 bytes")
    if not 0 < master_secret < backend.order:
        raise ParticipantError("master secret out of range")
    return ParticipantKey(backend, generator_a, generator_b, master_secret, prf_key)
