"""Bilinear group arithmetic with interchangeable backends.

Two backends share one element model. The mock backend is exponent
transparent: an element literally is its discrete log relative to the
side's canonical generator, so tests can read blinded values back out.
The production backend (see :mod:`doubleblind.supersingular`) hides
exponents behind a pairing-friendly curve.

Every element is tagged with the side it lives on (two source sides and
the pairing target). Cross-side operations are rejected, never coerced:
the pairing accepts exactly one element from each source side.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import gmpy2

__all__ = [
    "MOCK_DEFAULT_PRIME",
    "Side",
    "GroupElement",
    "GroupError",
    "SideMismatchError",
    "BackendMismatchError",
    "DecodeError",
    "DlogUnavailableError",
    "GroupBackend",
    "MockBackend",
    "ddh_check",
    "element_to_text",
    "element_from_text",
    "scalar_to_text",
    "scalar_from_text",
    "backend_from_params",
    "production_backend",
]

# Mersenne prime 2^61 - 1: large enough that fresh randomness never collides
# in practice, small enough that exponent arithmetic stays cheap.
MOCK_DEFAULT_PRIME = 2**61 - 1

PROD_PARAMS_LINE = "prod ss1536"


class Side(enum.Enum):
    """Which group an element belongs to."""

    SOURCE_A = "A"
    SOURCE_B = "B"
    TARGET = "T"


class GroupError(Exception):
    """Base class for group arithmetic failures."""


class SideMismatchError(GroupError):
    """An operation received an element from the wrong side."""


class BackendMismatchError(GroupError):
    """Elements from differently-parameterized backends were mixed."""


class DecodeError(GroupError):
    """Serialized bytes or text do not describe a valid element."""


class DlogUnavailableError(GroupError):
    """Discrete logs can only be read on the mock backend."""


@dataclass(frozen=True)
class GroupElement:
    """An element of one of the three groups.

    ``value`` is backend-defined: the exponent (an int) on the mock
    backend, a coordinate tuple on the production backend. ``order`` is
    the prime group order and doubles as a parameter fingerprint so that
    elements from differently-configured backends never compare equal.
    """

    side: Side
    value: Any
    order: int


class GroupBackend:
    """Shared scalar arithmetic; subclasses supply the group operations."""

    kind = ""
    order: int

    # -- scalars ---------------------------------------------------------

    def random_scalar(self, rng) -> int:
        """Uniform nonzero exponent; a raw zero draw is resampled."""
        while True:
            value = rng.randrange(self.order)
            if value != 0:
                return value

    def scalar_inverse(self, a: int) -> int:
        if a % self.order == 0:
            raise ValueError("zero has no inverse in the exponent field")
        return pow(a, -1, self.order)

    def scalar_width(self) -> int:
        """Fixed byte width of a serialized scalar."""
        return (self.order.bit_length() + 7) // 8

    # -- helpers for subclasses -------------------------------------------

    def _check_element(self, x: GroupElement) -> None:
        if not isinstance(x, GroupElement):
            raise TypeError(f"expected GroupElement, got {type(x).__name__}")
        if x.order != self.order:
            raise BackendMismatchError(
                "element belongs to a backend of different order"
            )

    def _check_exponent(self, k: int) -> int:
        k = k % self.order
        if k == 0:
            raise ValueError("exponent must be nonzero mod the group order")
        return k


class MockBackend(GroupBackend):
    """Exponent-transparent group: an element is its discrete log.

    Deliberately insecure. It exists so that protocol algebra can be
    verified against readable exponents; never use it outside tests and
    simulations.
    """

    kind = "mock"

    def __init__(self, p: int = MOCK_DEFAULT_PRIME):
        if p < 3 or not gmpy2.is_prime(p):
            raise ValueError(f"mock modulus must be an odd prime, got {p}")
        self.order = int(p)
        self._width = (self.order.bit_length() + 7) // 8

    def __repr__(self) -> str:
        return f"MockBackend(p={self.order})"

    def generator(self, side: Side) -> GroupElement:
        return GroupElement(side, 1, self.order)

    def element(self, side: Side, exponent: int) -> GroupElement:
        """Build an element directly from its exponent (mock-only plumbing)."""
        return GroupElement(side, exponent % self.order, self.order)

    def power(self, x: GroupElement, k: int) -> GroupElement:
        self._check_element(x)
        k = self._check_exponent(k)
        return GroupElement(x.side, x.value * k % self.order, self.order)

    def pair(self, x: GroupElement, y: GroupElement) -> GroupElement:
        self._check_element(x)
        self._check_element(y)
        if x.side is not Side.SOURCE_A or y.side is not Side.SOURCE_B:
            raise SideMismatchError(
                f"pairing takes (source A, source B), got ({x.side.value}, {y.side.value})"
            )
        return GroupElement(Side.TARGET, x.value * y.value % self.order, self.order)

    def mock_dlog(self, x: GroupElement) -> int:
        """The stored exponent relative to the side's canonical generator."""
        self._check_element(x)
        return x.value

    def is_identity(self, x: GroupElement) -> bool:
        self._check_element(x)
        return x.value == 0

    def element_width(self, side: Side) -> int:
        return self._width

    def encode(self, x: GroupElement) -> bytes:
        self._check_element(x)
        return x.value.to_bytes(self._width, "big")

    def decode(self, data: bytes, side: Side) -> GroupElement:
        if len(data) != self._width:
            raise DecodeError(
                f"expected {self._width} bytes for a mock element, got {len(data)}"
            )
        value = int.from_bytes(data, "big")
        if value >= self.order:
            raise DecodeError("mock exponent out of range")
        return GroupElement(side, value, self.order)

    def params_line(self) -> str:
        return f"mock p={self.order}"


def production_backend():
    """The fixed pairing-curve backend (imported lazily: gmpy2-heavy)."""
    from .supersingular import SupersingularBackend

    return SupersingularBackend()


def backend_from_params(line: str) -> GroupBackend:
    """Reconstruct a backend from its params line (`mock p=<n>` or `prod ss1536`)."""
    line = line.strip()
    if line.startswith("mock p="):
        try:
            p = int(line[len("mock p="):])
        except ValueError as exc:
            raise DecodeError(f"bad mock params line: {line!r}") from exc
        return MockBackend(p)
    if line == PROD_PARAMS_LINE:
        return production_backend()
    raise DecodeError(f"unrecognized params line: {line!r}")


def ddh_check(
    backend: GroupBackend,
    g: GroupElement,
    ga: GroupElement,
    gb: GroupElement,
    gc: GroupElement,
) -> bool:
    """Decide g^c = g^(a*b) from (g, g^a, g^b, g^c) using two pairings only.

    The base g and g^a live on source side A; g^b and g^c on side B.
    """
    expected = (
        (g, Side.SOURCE_A),
        (ga, Side.SOURCE_A),
        (gb, Side.SOURCE_B),
        (gc, Side.SOURCE_B),
    )
    for el, side in expected:
        if el.side is not side:
            raise SideMismatchError(
                f"ddh_check wants sides (A, A, B, B), got {el.side.value}"
            )
    return backend.pair(ga, gb) == backend.pair(g, gc)


# -- text encoding: side-tagged lowercase hex, fixed width per backend ----


def element_to_text(backend: GroupBackend, x: GroupElement) -> str:
    return f"{x.side.value}:{backend.encode(x).hex()}"


def element_from_text(backend: GroupBackend, text: str) -> GroupElement:
    tag, sep, hexpart = text.strip().partition(":")
    if not sep:
        raise DecodeError(f"element text is missing its side tag: {text!r}")
    try:
        side = Side(tag)
    except ValueError as exc:
        raise DecodeError(f"unknown side tag {tag!r}") from exc
    try:
        data = bytes.fromhex(hexpart)
    except ValueError as exc:
        raise DecodeError(f"element text is not valid hex: {text!r}") from exc
    return backend.decode(data, side)


def scalar_to_text(backend: GroupBackend, k: int) -> str:
    if not 0 < k < backend.order:
        raise ValueError("scalar out of range")
    return k.to_bytes(backend.scalar_width(), "big").hex()


def scalar_from_text(backend: GroupBackend, text: str) -> int:
    try:
        data = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise DecodeError(f"scalar text is not valid hex: {text!r}") from exc
    if len(data) != backend.scalar_width():
        raise DecodeError("scalar text has the wrong width")
    value = int.from_bytes(data, "big")
    if not 0 < value < backend.order:
        raise DecodeError("scalar out of range")
    return value
