"""The trusted central authority.

It owns the only table linking real-world entity labels to their secret
identifiers, and raises blinded bases to an identifier on request. It
never sees a participant's generators or stored indices, and it keeps no
per-request state: issuance is a pure read of the registry.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .groups import (
    GroupBackend,
    GroupElement,
    Side,
    SideMismatchError,
    backend_from_params,
    scalar_from_text,
    scalar_to_text,
)

__all__ = [
    "AuthorityError",
    "DuplicateLabelError",
    "UnknownLabelError",
    "IssuanceError",
    "IssuanceRequest",
    "EntityRegistry",
]


class AuthorityError(Exception):
    """Base class for registry and issuance failures."""


class DuplicateLabelError(AuthorityError):
    """The label already has an identifier."""


class UnknownLabelError(AuthorityError):
    """Issuance was requested for an unregistered entity."""


class IssuanceError(AuthorityError):
    """The issuance request itself is malformed."""


@dataclass(frozen=True)
class IssuanceRequest:
    """Blinded bases (one per source side) plus the entity to issue for."""

    label: str
    base_a: GroupElement
    base_b: GroupElement


class EntityRegistry:
    """Label -> identifier table with blinded issuance.

    Identifiers are uniform nonzero exponents, resampled on collision so
    that distinct entities never share one. They leave the registry only
    raised under a caller-supplied blinded base; ``privileged_identifier``
    exists for tests and must never back a protocol path.
    """

    def __init__(self, backend: GroupBackend):
        self.backend = backend
        self._identifiers: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._identifiers)

    def __contains__(self, label: str) -> bool:
        return label in self._identifiers

    def labels(self) -> list[str]:
        return list(self._identifiers)

    def register(self, label: str, rng) -> str:
        """Assign a fresh identifier to a label; returns a receipt, never the identifier."""
        if not label or "\t" in label or "\n" in label:
            raise AuthorityError(f"unusable label: {label!r}")
        if label in self._identifiers:
            raise DuplicateLabelError(f"label already registered: {label!r}")
        if len(self._identifiers) >= self.backend.order - 1:
            raise AuthorityError("identifier space exhausted")
        taken = set(self._identifiers.values())
        while True:
            identifier = self.backend.random_scalar(rng)
            if identifier not in taken:
                break
        self._identifiers[label] = identifier
        return hashlib.sha256(b"registered:" + label.encode()).hexdigest()[:16]

    def privileged_identifier(self, label: str) -> int:
        """Raw identifier lookup. Test oracle only; leaks the one secret Ted keeps."""
        if label not in self._identifiers:
            raise UnknownLabelError(f"unregistered entity: {label!r}")
        return self._identifiers[label]

    def issue(self, request: IssuanceRequest) -> tuple[GroupElement, GroupElement]:
        """Raise both blinded bases to the label's identifier.

        Nothing about the request is stored; the caller's bases are
        expected to be blinded by a fresh exponent, which makes them
        indistinguishable from random elements on this side of the wire.
        """
        if request.label not in self._identifiers:
            raise UnknownLabelError(f"unregistered entity: {request.label!r}")
        if request.base_a.side is not Side.SOURCE_A:
            raise SideMismatchError("base_a must live on source side A")
        if request.base_b.side is not Side.SOURCE_B:
            raise SideMismatchError("base_b must live on source side B")
        for base in (request.base_a, request.base_b):
            if self.backend.is_identity(base):
                raise IssuanceError("identity base: blinding failure")
        identifier = self._identifiers[request.label]
        return (
            self.backend.power(request.base_a, identifier),
            self.backend.power(request.base_b, identifier),
        )

    # -- persistence: params line, then `label<TAB>hex(N)` per record ------

    def save(self, path: str | Path) -> None:
        lines = [self.backend.params_line()]
        for label, identifier in self._identifiers.items():
            lines.append(f"{label}\t{scalar_to_text(self.backend, identifier)}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EntityRegistry":
        text = Path(path).read_text(encoding="utf-8")
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise AuthorityError(f"registry file is empty: {path}")
        backend = backend_from_params(lines[0])
        registry = cls(backend)
        for line in lines[1:]:
            label, sep, value = line.partition("\t")
            if not sep:
                raise AuthorityError(f"malformed registry record: {line!r}")
            if label in registry._identifiers:
                raise AuthorityError(f"duplicate label in registry file: {label!r}")
            registry._identifiers[label] = scalar_from_text(backend, value)
        return registry
