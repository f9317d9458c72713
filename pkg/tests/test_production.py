"""Production pairing backend: same contracts, hidden exponents."""

import pytest

import doubleblind as db
from doubleblind import Side
from doubleblind.supersingular import GEN_A, P, SupersingularBackend, validate_parameters


def test_frozen_parameters_validate():
    validate_parameters()


def test_generator_provenance():
    # the hardcoded generators re-derive from the documented hash procedure
    from doubleblind.supersingular import GEN_B, PARAM_TAG, _hash_to_point

    assert _hash_to_point(PARAM_TAG + b"/gen-A") == GEN_A
    assert _hash_to_point(PARAM_TAG + b"/gen-B") == GEN_B


def test_params_line(prod_backend):
    assert prod_backend.params_line() == "prod ss1536"
    again = db.backend_from_params("prod ss1536")
    assert again.order == prod_backend.order
    assert isinstance(again, SupersingularBackend)


def test_bilinearity_sample(prod_backend, rng):
    ga = prod_backend.generator(Side.SOURCE_A)
    gb = prod_backend.generator(Side.SOURCE_B)
    order = prod_backend.order
    for _ in range(5):
        x = prod_backend.power(ga, prod_backend.random_scalar(rng))
        y = prod_backend.power(gb, prod_backend.random_scalar(rng))
        a = prod_backend.random_scalar(rng)
        b = prod_backend.random_scalar(rng)
        lhs = prod_backend.pair(prod_backend.power(x, a), prod_backend.power(y, b))
        rhs = prod_backend.power(prod_backend.pair(x, y), a * b % order)
        assert lhs == rhs


def test_power_composition(prod_backend, rng):
    x = prod_backend.power(
        prod_backend.generator(Side.SOURCE_A), prod_backend.random_scalar(rng)
    )
    for _ in range(3):
        a = prod_backend.random_scalar(rng)
        b = prod_backend.random_scalar(rng)
        assert prod_backend.power(prod_backend.power(x, a), b) == prod_backend.power(
            x, a * b % prod_backend.order
        )


def test_pairing_non_degenerate(prod_backend):
    ga = prod_backend.generator(Side.SOURCE_A)
    gb = prod_backend.generator(Side.SOURCE_B)
    base = prod_backend.pair(ga, gb)
    assert base != prod_backend.pair(ga, prod_backend.power(gb, 2))
    # order exactly r: raising to r-1 then once more returns to the value
    walk = prod_backend.power(base, prod_backend.order - 1)
    assert walk != base


def test_repeated_power_on_same_base_consistent(prod_backend, rng):
    # the fixed-base fast path must agree with the cold path
    ga = prod_backend.generator(Side.SOURCE_A)
    k = prod_backend.random_scalar(rng)
    first = prod_backend.power(ga, k)
    for _ in range(5):
        assert prod_backend.power(ga, k) == first
    assert db.production_backend().power(ga, k) == first


def test_serialization_roundtrip(prod_backend, rng):
    ga = prod_backend.generator(Side.SOURCE_A)
    gb = prod_backend.generator(Side.SOURCE_B)
    x = prod_backend.power(ga, prod_backend.random_scalar(rng))
    y = prod_backend.power(gb, prod_backend.random_scalar(rng))
    for el in (ga, gb, x, y, prod_backend.pair(x, y)):
        data = prod_backend.encode(el)
        assert len(data) == prod_backend.element_width(el.side) == 384
        assert prod_backend.decode(data, el.side) == el
        text = db.element_to_text(prod_backend, el)
        assert db.element_from_text(prod_backend, text) == el


def test_decode_rejects_bad_source_points(prod_backend):
    with pytest.raises(db.DecodeError):
        prod_backend.decode(b"\x00" * 100, Side.SOURCE_A)
    # (0, 0) is on the curve but has order 2, outside the subgroup
    two_torsion = (0).to_bytes(192, "big") * 2
    with pytest.raises(db.DecodeError):
        prod_backend.decode(two_torsion, Side.SOURCE_A)
    # coordinates beyond the field
    big = (P + 1).to_bytes(192, "big") + (1).to_bytes(192, "big")
    with pytest.raises(db.DecodeError):
        prod_backend.decode(big, Side.SOURCE_A)
    # generic off-curve point
    off = (5).to_bytes(192, "big") + (7).to_bytes(192, "big")
    with pytest.raises(db.DecodeError):
        prod_backend.decode(off, Side.SOURCE_A)
    # a curve point of full-group order is rejected by the subgroup check
    assert GEN_A[0] != 0


def test_decode_rejects_bad_target_values(prod_backend):
    zero = (0).to_bytes(192, "big") * 2
    with pytest.raises(db.DecodeError):
        prod_backend.decode(zero, Side.TARGET)
    identity = (1).to_bytes(192, "big") + (0).to_bytes(192, "big")
    with pytest.raises(db.DecodeError):
        prod_backend.decode(identity, Side.TARGET)
    outside = (2).to_bytes(192, "big") + (3).to_bytes(192, "big")
    with pytest.raises(db.DecodeError):
        prod_backend.decode(outside, Side.TARGET)


def test_dlog_unavailable(prod_backend):
    ga = prod_backend.generator(Side.SOURCE_A)
    with pytest.raises(db.DlogUnavailableError, match="dlog unavailable"):
        prod_backend.mock_dlog(ga)


def test_side_discipline(prod_backend):
    ga = prod_backend.generator(Side.SOURCE_A)
    gb = prod_backend.generator(Side.SOURCE_B)
    with pytest.raises(db.SideMismatchError):
        prod_backend.pair(gb, ga)
    with pytest.raises(db.SideMismatchError):
        prod_backend.pair(ga, ga)
    with pytest.raises(db.SideMismatchError):
        prod_backend.generator(Side.TARGET)


def test_scalar_arithmetic(prod_backend, rng):
    a = prod_backend.random_scalar(rng)
    assert 0 < a < prod_backend.order
    assert a * prod_backend.scalar_inverse(a) % prod_backend.order == 1
    assert prod_backend.scalar_width() == 32


def test_power_rejects_zero(prod_backend):
    ga = prod_backend.generator(Side.SOURCE_A)
    with pytest.raises(ValueError):
        prod_backend.power(ga, prod_backend.order)


def test_mixed_backend_rejected(prod_backend, small_backend):
    foreign = small_backend.element(Side.SOURCE_A, 3)
    with pytest.raises(db.BackendMismatchError):
        prod_backend.power(foreign, 2)
