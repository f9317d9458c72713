"""Multi-key record addressing (experimental).

Instead of one index per record, a record at a d-bit address carries d
keys, one per dimension, each selected from that dimension's two
enrolled attributes (bit 0 or bit 1). A responder resolves a query one
dimension at a time with at most two comparisons each, then looks the
record up directly: at most 2d comparisons against d * 2^d for the
brute-force bundle scan.

The 2d routing entities are registered once per federation; every party
enrolls its own attribute pair per dimension under those shared labels,
using per-dimension exponents derived from its own key.

Known leakage, by construction: resolving bits tells the responder the
matched record's address. Not mitigated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .authority import DuplicateLabelError, EntityRegistry, IssuanceRequest
from .groups import backend_from_params, element_from_text, element_to_text
from .participant import (
    ComparisonQuery,
    IndexAttribute,
    ParticipantError,
    ParticipantKey,
    compare_with_exponent,
    derive_dimension_exponent,
    new_query_id,
    _fresh_blinding,
)

__all__ = [
    "MultiKeyError",
    "AddressCollisionError",
    "AmbiguousDimensionError",
    "DimensionSetup",
    "DimensionKeys",
    "MultiKeyIndex",
    "MultiKeyRecord",
    "MultiKeyMatch",
    "MultiKeyDatabase",
    "setup_dimensions",
    "enroll_party_dimensions",
    "enroll_multikey",
    "build_multikey_query",
    "match_multikey",
    "scan_multikey",
]


class MultiKeyError(ParticipantError):
    """Base class for multi-key indexing failures."""


class AddressCollisionError(MultiKeyError):
    """Two records were enrolled at the same bit address."""


class AmbiguousDimensionError(MultiKeyError):
    """Both bit attributes matched one dimension: identifiers collided."""


@dataclass(frozen=True)
class DimensionSetup:
    """The federation-global routing entities: two labels per dimension."""

    dimensions: int
    labels: tuple[tuple[str, str], ...]

    def label(self, dimension: int, bit: int) -> str:
        return self.labels[dimension][bit]


@dataclass(frozen=True)
class DimensionKeys:
    """One party's issued attribute pair per dimension.

    ``attributes[k][b]`` is the party's encryption of dimension k's
    bit-b identifier under the party's dimension-k exponent. The slot
    field of each attribute records the dimension index.
    """

    setup: DimensionSetup
    attributes: tuple[tuple[IndexAttribute, IndexAttribute], ...]

    @property
    def dimensions(self) -> int:
        return self.setup.dimensions


@dataclass(frozen=True)
class MultiKeyIndex:
    """A record's d-key bundle: the bit-selected attribute per dimension."""

    bits: str
    keys: tuple[IndexAttribute, ...]


@dataclass(frozen=True)
class MultiKeyRecord:
    index: MultiKeyIndex
    payload: str


@dataclass(frozen=True)
class MultiKeyMatch:
    """Outcome of an addressed lookup, with instrumentation.

    ``foreign`` marks a query no dimension attribute could resolve (it
    was built against different routing entities). ``record`` is None
    when the address resolved but no record occupies it.
    """

    record: Optional[MultiKeyRecord]
    address: Optional[str]
    comparisons: int
    foreign: bool = False


def _check_bits(bits: str, dimensions: int) -> None:
    if len(bits) != dimensions or any(b not in "01" for b in bits):
        raise MultiKeyError(
            f"address must be {dimensions} bits of 0/1, got {bits!r}"
        )


def setup_dimensions(registry: EntityRegistry, dimensions: int, rng) -> DimensionSetup:
    """Register 2d fresh routing entities.

    Labels are `dim-<k>-bit-<b>`; when a label is already taken (a
    second setup against the same registry) a numeric suffix is added,
    so every setup gets identifiers of its own.
    """
    if dimensions < 1:
        raise MultiKeyError("at least one dimension is required")
    labels = []
    for k in range(1, dimensions + 1):
        pair = []
        for b in (0, 1):
            base = f"dim-{k}-bit-{b}"
            label, attempt = base, 1
            while True:
                try:
                    registry.register(label, rng)
                    break
                except DuplicateLabelError:
                    attempt += 1
                    label = f"{base}-{attempt}"
            pair.append(label)
        labels.append((pair[0], pair[1]))
    return DimensionSetup(dimensions, tuple(labels))


def enroll_party_dimensions(
    key: ParticipantKey, setup: DimensionSetup, registry: EntityRegistry, rng
) -> DimensionKeys:
    """Issue this party's attribute pair for every dimension.

    Each attribute is an ordinary blinded issuance, unblinded to the
    party's dimension-k exponent instead of a record-slot exponent.
    """
    backend = key.backend
    attributes = []
    for k in range(setup.dimensions):
        exponent = derive_dimension_exponent(key, k)
        pair = []
        for b in (0, 1):
            blinding = _fresh_blinding(backend, rng)
            request = IssuanceRequest(
                label=setup.label(k, b),
                base_a=backend.power(key.generator_a, blinding),
                base_b=backend.power(key.generator_b, blinding),
            )
            raised_a, raised_b = registry.issue(request)
            unblind = exponent * backend.scalar_inverse(blinding)
            pair.append(
                IndexAttribute(
                    slot=k,
                    element_a=backend.power(raised_a, unblind),
                    element_b=backend.power(raised_b, unblind),
                )
            )
        attributes.append((pair[0], pair[1]))
    return DimensionKeys(setup, tuple(attributes))


def enroll_multikey(
    key: ParticipantKey, dims: DimensionKeys, bits: str
) -> MultiKeyIndex:
    """The d-key bundle addressing one record: bit-selected attributes."""
    _check_bits(bits, dims.dimensions)
    keys = tuple(
        dims.attributes[k][int(bits[k])] for k in range(dims.dimensions)
    )
    return MultiKeyIndex(bits, keys)


def build_multikey_query(
    key: ParticipantKey, dims: DimensionKeys, bits: str, rng
) -> list[ComparisonQuery]:
    """One independent query per dimension, each with its own blinding."""
    _check_bits(bits, dims.dimensions)
    backend = key.backend
    queries = []
    for k in range(dims.dimensions):
        attribute = dims.attributes[k][int(bits[k])]
        exponent = derive_dimension_exponent(key, k)
        blinding = _fresh_blinding(backend, rng)
        queries.append(
            ComparisonQuery(
                query_id=new_query_id(rng),
                u1=backend.power(key.generator_a, blinding * exponent),
                u2=backend.power(attribute.element_a, blinding),
                predicate=f"dimension {k}",
            )
        )
    return queries


class MultiKeyDatabase:
    """Directly addressed records plus the owner's dimension keys."""

    def __init__(self, backend, owner_fingerprint: str, dimension_keys: DimensionKeys):
        self.backend = backend
        self.owner_fingerprint = owner_fingerprint
        self.dimension_keys = dimension_keys
        self.records: dict[str, MultiKeyRecord] = {}

    @property
    def dimensions(self) -> int:
        return self.dimension_keys.dimensions

    def __len__(self) -> int:
        return len(self.records)

    def add(self, key: ParticipantKey, bits: str, payload: str) -> MultiKeyRecord:
        _check_bits(bits, self.dimensions)
        if bits in self.records:
            raise AddressCollisionError(f"address {bits} is already occupied")
        if "\t" in payload or "\n" in payload:
            raise MultiKeyError("payload must be single-line, tab-free text")
        record = MultiKeyRecord(enroll_multikey(key, self.dimension_keys, bits), payload)
        self.records[bits] = record
        return record

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        backend = self.backend
        lines = [
            backend.params_line(),
            f"fingerprint={self.owner_fingerprint}",
            f"d={self.dimensions}",
        ]
        for k in range(self.dimensions):
            for b in (0, 1):
                attr = self.dimension_keys.attributes[k][b]
                lines.append(
                    "\t".join(
                        (
                            "dim",
                            str(k),
                            str(b),
                            self.dimension_keys.setup.label(k, b),
                            element_to_text(backend, attr.element_a),
                            element_to_text(backend, attr.element_b),
                        )
                    )
                )
        for bits in sorted(self.records):
            record = self.records[bits]
            fields = [bits]
            for attr in record.index.keys:
                fields.append(element_to_text(backend, attr.element_a))
                fields.append(element_to_text(backend, attr.element_b))
            fields.append(record.payload)
            lines.append("\t".join(fields))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MultiKeyDatabase":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        lines = [line for line in lines if line.strip()]
        if (
            len(lines) < 3
            or not lines[1].startswith("fingerprint=")
            or not lines[2].startswith("d=")
        ):
            raise MultiKeyError(f"malformed multikey database file: {path}")
        backend = backend_from_params(lines[0])
        fingerprint = lines[1].removeprefix("fingerprint=")
        dimensions = int(lines[2].removeprefix("d="))
        labels: list[list[str]] = [["", ""] for _ in range(dimensions)]
        attributes: list[list[Any]] = [[None, None] for _ in range(dimensions)]
        body = lines[3:]
        while body and body[0].startswith("dim\t"):
            _, k_text, b_text, label, el_a, el_b = body.pop(0).split("\t")
            k, b = int(k_text), int(b_text)
            labels[k][b] = label
            attributes[k][b] = IndexAttribute(
                k,
                element_from_text(backend, el_a),
                element_from_text(backend, el_b),
            )
        if any(attr is None for pair in attributes for attr in pair):
            raise MultiKeyError("multikey file is missing dimension attributes")
        setup = DimensionSetup(
            dimensions, tuple((pair[0], pair[1]) for pair in labels)
        )
        dims = DimensionKeys(
            setup, tuple((pair[0], pair[1]) for pair in attributes)
        )
        db = cls(backend, fingerprint, dims)
        for line in body:
            fields = line.split("\t")
            if len(fields) != 2 + 2 * dimensions:
                raise MultiKeyError(f"malformed multikey row: {line!r}")
            bits, payload = fields[0], fields[-1]
            _check_bits(bits, dimensions)
            keys = tuple(
                IndexAttribute(
                    k,
                    element_from_text(backend, fields[1 + 2 * k]),
                    element_from_text(backend, fields[2 + 2 * k]),
                )
                for k in range(dimensions)
            )
            db.records[bits] = MultiKeyRecord(MultiKeyIndex(bits, keys), payload)
        return db


def match_multikey(
    key: ParticipantKey, db: MultiKeyDatabase, queries: list[ComparisonQuery]
) -> MultiKeyMatch:
    """Resolve one bit per dimension, then address the record directly.

    Exactly two comparisons per resolved dimension; a dimension where
    neither attribute matches classifies the query as foreign.
    """
    if len(queries) != db.dimensions:
        raise MultiKeyError(
            f"expected {db.dimensions} queries, got {len(queries)}"
        )
    dims = db.dimension_keys
    comparisons = 0
    bits = []
    for k, query in enumerate(queries):
        exponent = derive_dimension_exponent(key, k)
        hit0 = compare_with_exponent(
            key, exponent, dims.attributes[k][0].element_b, query
        )
        hit1 = compare_with_exponent(
            key, exponent, dims.attributes[k][1].element_b, query
        )
        comparisons += 2
        if hit0 and hit1:
            raise AmbiguousDimensionError(
                f"dimension {k}: both bit attributes matched"
            )
        if not hit0 and not hit1:
            return MultiKeyMatch(None, None, comparisons, foreign=True)
        bits.append("1" if hit1 else "0")
    address = "".join(bits)
    return MultiKeyMatch(db.records.get(address), address, comparisons)


def scan_multikey(
    key: ParticipantKey, db: MultiKeyDatabase, queries: list[ComparisonQuery]
) -> MultiKeyMatch:
    """Brute-force bundle scan: the oracle the addressed lookup is checked against.

    Compares every query against every record's bundle, d comparisons
    per record, with no early exit.
    """
    if len(queries) != db.dimensions:
        raise MultiKeyError(
            f"expected {db.dimensions} queries, got {len(queries)}"
        )
    comparisons = 0
    found: Optional[MultiKeyRecord] = None
    for bits in sorted(db.records):
        record = db.records[bits]
        all_match = True
        for k, query in enumerate(queries):
            exponent = derive_dimension_exponent(key, k)
            if not compare_with_exponent(
                key, exponent, record.index.keys[k].element_b, query
            ):
                all_match = False
            comparisons += 1
        if all_match and found is None:
            found = record
    return MultiKeyMatch(found, found.index.bits if found else None, comparisons)
