"""File-based wire format: one JSON envelope per message.

Envelopes carry a kind, a correlation id, the sender's role tag, and a
kind-specific body. Field order is fixed and elements travel as
side-tagged hex, so identical protocol runs serialize to identical
bytes. A comparison response carries nothing but the verdict text: no
group elements, no responder slot numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .authority import IssuanceRequest
from .groups import (
    DecodeError,
    GroupBackend,
    GroupElement,
    element_from_text,
    element_to_text,
)
from .participant import ComparisonQuery

__all__ = [
    "ISSUANCE_REQUEST",
    "ISSUANCE_RESPONSE",
    "COMPARISON_REQUEST",
    "COMPARISON_RESPONSE",
    "KINDS",
    "MessageEnvelope",
    "envelope_to_json",
    "envelope_from_json",
    "issuance_request_envelope",
    "parse_issuance_request",
    "issuance_response_envelope",
    "parse_issuance_response",
    "comparison_request_envelope",
    "parse_comparison_request",
    "comparison_response_envelope",
]

ISSUANCE_REQUEST = "issuance-request"
ISSUANCE_RESPONSE = "issuance-response"
COMPARISON_REQUEST = "comparison-request"
COMPARISON_RESPONSE = "comparison-response"
KINDS = (ISSUANCE_REQUEST, ISSUANCE_RESPONSE, COMPARISON_REQUEST, COMPARISON_RESPONSE)

_BODY_FIELDS = {
    ISSUANCE_REQUEST: ("label", "base_a", "base_b"),
    ISSUANCE_RESPONSE: ("raised_a", "raised_b"),
    COMPARISON_REQUEST: ("u1", "u2", "predicate"),
    COMPARISON_RESPONSE: ("verdict",),
}


@dataclass(frozen=True)
class MessageEnvelope:
    kind: str
    query_id: str
    sender: str
    body: dict


def envelope_to_json(envelope: MessageEnvelope) -> str:
    fields = _BODY_FIELDS[envelope.kind]
    body = {name: envelope.body[name] for name in fields}
    return (
        json.dumps(
            {
                "kind": envelope.kind,
                "query_id": envelope.query_id,
                "sender": envelope.sender,
                "body": body,
            },
            indent=2,
        )
        + "\n"
    )


def envelope_from_json(text: str) -> MessageEnvelope:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"envelope is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DecodeError("envelope must be a JSON object")
    kind = raw.get("kind")
    if kind not in _BODY_FIELDS:
        raise DecodeError(f"unknown envelope kind: {kind!r}")
    body = raw.get("body")
    if not isinstance(body, dict):
        raise DecodeError("envelope body must be an object")
    missing = [name for name in _BODY_FIELDS[kind] if name not in body]
    if missing:
        raise DecodeError(f"{kind} body is missing fields: {missing}")
    return MessageEnvelope(
        kind=kind,
        query_id=str(raw.get("query_id", "")),
        sender=str(raw.get("sender", "")),
        body={name: str(body[name]) for name in _BODY_FIELDS[kind]},
    )


# -- bridges between envelopes and protocol objects -------------------------


def issuance_request_envelope(
    backend: GroupBackend, sender: str, exchange_id: str, request: IssuanceRequest
) -> MessageEnvelope:
    return MessageEnvelope(
        kind=ISSUANCE_REQUEST,
        query_id=exchange_id,
        sender=sender,
        body={
            "label": request.label,
            "base_a": element_to_text(backend, request.base_a),
            "base_b": element_to_text(backend, request.base_b),
        },
    )


def parse_issuance_request(
    backend: GroupBackend, envelope: MessageEnvelope
) -> IssuanceRequest:
    return IssuanceRequest(
        label=envelope.body["label"],
        base_a=element_from_text(backend, envelope.body["base_a"]),
        base_b=element_from_text(backend, envelope.body["base_b"]),
    )


def issuance_response_envelope(
    backend: GroupBackend,
    sender: str,
    exchange_id: str,
    raised_a: GroupElement,
    raised_b: GroupElement,
) -> MessageEnvelope:
    return MessageEnvelope(
        kind=ISSUANCE_RESPONSE,
        query_id=exchange_id,
        sender=sender,
        body={
            "raised_a": element_to_text(backend, raised_a),
            "raised_b": element_to_text(backend, raised_b),
        },
    )


def parse_issuance_response(
    backend: GroupBackend, envelope: MessageEnvelope
) -> tuple[GroupElement, GroupElement]:
    return (
        element_from_text(backend, envelope.body["raised_a"]),
        element_from_text(backend, envelope.body["raised_b"]),
    )


def comparison_request_envelope(
    backend: GroupBackend, sender: str, query: ComparisonQuery
) -> MessageEnvelope:
    return MessageEnvelope(
        kind=COMPARISON_REQUEST,
        query_id=query.query_id,
        sender=sender,
        body={
            "u1": element_to_text(backend, query.u1),
            "u2": element_to_text(backend, query.u2),
            "predicate": query.predicate,
        },
    )


def parse_comparison_request(
    backend: GroupBackend, envelope: MessageEnvelope
) -> ComparisonQuery:
    return ComparisonQuery(
        query_id=envelope.query_id,
        u1=element_from_text(backend, envelope.body["u1"]),
        u2=element_from_text(backend, envelope.body["u2"]),
        predicate=envelope.body["predicate"],
    )


def comparison_response_envelope(
    sender: str, query_id: str, verdict: str
) -> MessageEnvelope:
    return MessageEnvelope(
        kind=COMPARISON_RESPONSE,
        query_id=query_id,
        sender=sender,
        body={"verdict": verdict},
    )
