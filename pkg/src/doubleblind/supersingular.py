"""Pairing-capable group over a fixed supersingular curve.

The curve is y^2 = x^3 + x over F_p with p = 3 (mod 4), which is
supersingular with exactly p + 1 points. Source elements live in the
256-bit prime-order subgroup; pairing values live in the order-r
subgroup of F_{p^2}*. With a 1536-bit p, discrete logs cost ~2^128 both
on the curve (Pollard rho against r) and in the 3072-bit field F_{p^2}
(index calculus), matching a 128-bit security target.

The pairing is the reduced Tate pairing composed with the distortion
map (x, y) -> (-x, iy), where i^2 = -1 in F_{p^2}. Miller's algorithm
runs with denominator elimination: every vertical-line factor lies in
F_p and is annihilated by the final exponentiation, whose exponent is
(p^2 - 1)/r = (p - 1) * h. Big-integer arithmetic is gmpy2's.

Parameter provenance (deterministic, re-derivable):
  r = next_prime(SHA-256("doubleblind/ss1536/v1/r") with top/low bits set)
  h = 2^1280 + 4c for the smallest c >= 1 making p = h*r - 1 prime
      (4 | h forces p = 3 mod 4; the low weight keeps z^h cheap)
  generators: SHA-512 counter stream -> curve point, cofactor cleared,
      tags ".../gen-A" and ".../gen-B"
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import gmpy2

from .groups import (
    PROD_PARAMS_LINE,
    DecodeError,
    DlogUnavailableError,
    GroupBackend,
    GroupElement,
    Side,
    SideMismatchError,
)

__all__ = ["SupersingularBackend", "validate_parameters"]

PARAM_TAG = b"doubleblind/ss1536/v1"

R_HEX = "e17ab592d7f3384ce31f707b2db39720ac2f195b6156899b23424de9d0791e17"
H_TAIL = 675  # h = 2^1280 + 4 * H_TAIL

R = int(R_HEX, 16)
H = (1 << 1280) + 4 * H_TAIL
P = H * R - 1

GEN_A = (
    int(
        "b99764b21b34201d7f7fc1e972640c983f4a5dd8c44756293e0c4bb239b1e10f"
        "54dcd9b73d138b86ce32b9bb897657e8caec4ad68f4c6e2584fa6f1d463a8983"
        "793c07dfc97426ed50da7f12ce08c0a50f5b98ff1d39898f96a61b4afc26b55f"
        "e3353eeaec60dc028a31db4f65f05fc4d7410a88243381e83927bf9abf315936"
        "103974211bc56007f43a77fed92516f13eeee33d73faa1d3362c09d5d8780f7d"
        "12c6f7ec60989394b5190b1ff977764e6fddd6e38bfe71622230a498513451a4",
        16,
    ),
    int(
        "d0f1c9e78f7379e0ec9d367cfdf5518c3f82d6c703497092905e4dfe07e97285"
        "d409f062335f97f2e6874be6f9bf0ce2326fee4eeb04c49d5bcb090b8cf69607"
        "756d70e44f3d2254ce786e5abd16944d00b8399ceb97d0bfa8246e968d7f4113"
        "c8484979725fcc0284ec868258bc2ad9cbe01a3df8905c062118d01898563aaf"
        "c820b28d11b2d6bc55e7b509755ecdf798b3cca54648c72bab3c20c4b1912c5e"
        "bef7ec151b67591f2b7f4650d8654a1b9a858371dd71f650fc27af6def783b19",
        16,
    ),
)
GEN_B = (
    int(
        "34822344fdc463b4186fc5a24e3afa3ad81abfc5671da7e5f06ddc3beeb2cd05"
        "d5edbabc0f68eb6ddca17fffd765ec2d26c0db9a889f312de25e8d01b264c27e"
        "6455ab38fc5f74f1f9633af183ab29d6e034afbb15ee86087da01eeb6d6dcde6"
        "d6e7ac2c0b0e6d0d6919427b0c90749c032de6e30f5e9477f7e433c479c23266"
        "4ca9b5b14123ca6beb65da613f339a1b7fa159414da488af068dd45d8c0db931"
        "34cfb97dd10be2314c2248f01af5ec8f9a71e6fbb3b400de14c697077512dabc",
        16,
    ),
    int(
        "62317f5da9962d6b6bef7334faf900017bbbf110732c6c70f9654539d30d7e40"
        "cbfe912ccddc6699b8b501cd69f0cc521d05a56846175033f90b51d7ed047648"
        "9dbe6e81e44db530f976e342caad1f78e5878bc34ca9b6ab3963c9450d5f6e7f"
        "0f5dcfe2557a085f5e52ebab07a6f8ecea8651fcc8f09ab622afc3ee7e91be96"
        "4f189f5bccbc09a8fa4344d8df870e1d11eee2626c1e7d8bcc3f245c332175a9"
        "08114e50ad798342b952eb2155ae758e019b135328d7dc5efb8c4b6c486bb409",
        16,
    ),
)

_P = gmpy2.mpz(P)
_COORD_BYTES = 192  # 1536-bit field elements
_ELEMENT_BYTES = 2 * _COORD_BYTES

_R_BITS = bin(R)[3:]  # Miller loop bits, msb skipped


# -- affine curve arithmetic (a = 1, b = 0) --------------------------------
# Points are (x, y) mpz pairs; None is the point at infinity.


def _ec_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    x1, y1 = a
    x2, y2 = b
    if x1 == x2:
        if (y1 + y2) % _P == 0:
            return None
        lam = (3 * x1 * x1 + 1) * gmpy2.invert(2 * y1, _P) % _P
    else:
        lam = (y2 - y1) * gmpy2.invert(x2 - x1, _P) % _P
    x3 = (lam * lam - x1 - x2) % _P
    return (x3, (lam * (x1 - x3) - y1) % _P)


def _jac_dbl(X, Y, Z):
    """Jacobian doubling, dbl-2007-bl with a = 1 (M = 3*XX + ZZ^2)."""
    mod = _P
    xx = X * X % mod
    yy = Y * Y % mod
    yyyy = yy * yy % mod
    zz = Z * Z % mod
    s = 2 * ((X + yy) ** 2 - xx - yyyy) % mod
    m = (3 * xx + zz * zz) % mod
    X3 = (m * m - 2 * s) % mod
    Y3 = (m * (s - X3) - 8 * yyyy) % mod
    Z3 = ((Y + Z) ** 2 - yy - zz) % mod
    return (X3, Y3, Z3) if Z3 != 0 else None


def _jac_madd(X, Y, Z, x2, y2):
    """Jacobian + affine mixed addition, madd-2007-bl.

    Falls back to affine arithmetic on the (rare in our call graph)
    equal-x cases: doubling or cancellation to infinity.
    """
    mod = _P
    z1z1 = Z * Z % mod
    u2 = x2 * z1z1 % mod
    s2 = y2 * Z * z1z1 % mod
    if u2 == X:
        if (s2 + Y) % mod == 0:
            return None
        ax, ay = _jacobian_to_affine(X, Y, Z)
        dbl = _ec_add((ax, ay), (ax, ay))
        if dbl is None:
            return None
        return (gmpy2.mpz(dbl[0]), gmpy2.mpz(dbl[1]), gmpy2.mpz(1))
    hh = (u2 - X) % mod
    h2 = hh * hh % mod
    i4 = 4 * h2 % mod
    j = hh * i4 % mod
    rr = 2 * (s2 - Y) % mod
    v = X * i4 % mod
    X3 = (rr * rr - j - 2 * v) % mod
    Y3 = (rr * (v - X3) - 2 * Y * j) % mod
    Z3 = ((Z + hh) ** 2 - z1z1 - h2) % mod
    return (X3, Y3, Z3) if Z3 != 0 else None


def _ec_mul(point, k):
    """Scalar multiple via Jacobian double-and-add; returns affine or None."""
    if k == 0 or point is None:
        return None
    x2, y2 = point  # affine base for mixed additions
    acc = None
    for bit in bin(k)[2:]:
        if acc is not None:
            acc = _jac_dbl(*acc)
        if bit == "1":
            if acc is None:
                acc = (x2, y2, gmpy2.mpz(1))
            else:
                acc = _jac_madd(*acc, x2, y2)
    if acc is None:
        return None
    return _jacobian_to_affine(*acc)


# -- fixed-base comb tables for hot bases ------------------------------------
# A base seen _COMB_THRESHOLD times gets a 4-bit comb: 64 columns of the 15
# odd-and-even digit multiples, all normalized to affine, after which one
# scalar multiplication is ~63 mixed additions and no doublings. Party and
# canonical generators recur constantly; blinded one-shot bases never do.

_COMB_THRESHOLD = 3
_COMB_MAX_TABLES = 8
_COMB_COLUMNS = 64  # 256-bit exponents, 4 bits per column

_comb_uses: dict = {}
_comb_tables: dict = {}


def _comb_table(base):
    """64 x 15 table: entry [i][j-1] = j * 2^(4i) * base, affine."""
    mod = _P
    column = (gmpy2.mpz(base[0]), gmpy2.mpz(base[1]), gmpy2.mpz(1))
    jacobian: list = []
    for _ in range(_COMB_COLUMNS):
        cx, cy, cz = column
        czi = gmpy2.invert(cz, mod)
        czi2 = czi * czi % mod
        ax, ay = cx * czi2 % mod, cy * czi2 * czi % mod
        entry = (ax, ay, gmpy2.mpz(1))
        col_entries = [entry]
        for _ in range(14):
            entry = _jac_madd(*entry, ax, ay)
            col_entries.append(entry)
        jacobian.append(col_entries)
        for _ in range(4):
            column = _jac_dbl(*column)
    # batch-normalize all entries to affine (one field inversion total)
    flat = [pt for col in jacobian for pt in col]
    prefix = [gmpy2.mpz(1)]
    for pt in flat:
        prefix.append(prefix[-1] * pt[2] % mod)
    inv_all = gmpy2.invert(prefix[-1], mod)
    affine_flat = []
    for idx in range(len(flat) - 1, -1, -1):
        zi = prefix[idx] * inv_all % mod
        inv_all = inv_all * flat[idx][2] % mod
        zi2 = zi * zi % mod
        X, Y, _ = flat[idx]
        affine_flat.append((X * zi2 % mod, Y * zi2 * zi % mod))
    affine_flat.reverse()
    return [affine_flat[i * 15:(i + 1) * 15] for i in range(_COMB_COLUMNS)]


def _ec_mul_hot(point_key, point, k):
    """Like _ec_mul, but builds and uses a comb for recurring bases."""
    table = _comb_tables.get(point_key)
    if table is None:
        if len(_comb_uses) > 4096:
            _comb_uses.clear()
        seen = _comb_uses.get(point_key, 0) + 1
        _comb_uses[point_key] = seen
        if seen < _COMB_THRESHOLD or len(_comb_tables) >= _COMB_MAX_TABLES:
            return _ec_mul(point, k)
        table = _comb_table(point)
        _comb_tables[point_key] = table
    acc = None
    for i in range(_COMB_COLUMNS):
        digit = (k >> (4 * i)) & 15
        if digit:
            ex, ey = table[i][digit - 1]
            if acc is None:
                acc = (ex, ey, gmpy2.mpz(1))
            else:
                acc = _jac_madd(*acc, ex, ey)
    if acc is None:
        return None
    return _jacobian_to_affine(*acc)


def _jacobian_to_affine(X, Y, Z):
    zi = gmpy2.invert(Z, _P)
    zi2 = zi * zi % _P
    return (X * zi2 % _P, Y * zi2 * zi % _P)


def _on_curve(x, y):
    return (y * y - (x * x * x + x)) % _P == 0


def _sqrt_mod_p(a):
    """Square root mod p for p = 3 (mod 4); None when a is a non-residue."""
    root = gmpy2.powmod(a, (_P + 1) // 4, _P)
    if root * root % _P != a % _P:
        return None
    return root


def _hash_to_point(tag: bytes):
    """Counter-stream hash to a point of order r (cofactor cleared)."""
    ctr = 0
    while True:
        buf = b"".join(
            hashlib.sha512(tag + b"/%d/%d" % (ctr, i)).digest() for i in range(3)
        )
        x = gmpy2.mpz(int.from_bytes(buf, "big")) % _P
        y = _sqrt_mod_p((x * x * x + x) % _P)
        if y is not None:
            point = _ec_mul((x, y), H)
            if point is not None:
                return point
        ctr += 1


# -- pairing ----------------------------------------------------------------


@lru_cache(maxsize=32)
def _miller_coefficients(point):
    """Slope/point triples of the Miller loop for a fixed first argument.

    The point track of Miller's algorithm depends only on P, so repeated
    pairings with one P (a query element against every database row)
    reuse these coefficients and pay only for line evaluations.
    """
    mod = _P
    invert = gmpy2.invert
    xp, yp = gmpy2.mpz(point[0]), gmpy2.mpz(point[1])
    xt, yt = xp, yp
    coeffs = []
    for bit in _R_BITS:
        # tangent at T, then T <- 2T
        lam = (3 * xt * xt + 1) * invert(2 * yt, mod) % mod
        coeffs.append((lam, xt, yt))
        x3 = (lam * lam - 2 * xt) % mod
        yt = (lam * (xt - x3) - yt) % mod
        xt = x3
        if bit == "1":
            if xt == xp:
                # T = -P: the chord is vertical, an F_p factor that the
                # final exponentiation kills. Only reachable on the last
                # bit (r is prime), where T + P = infinity.
                coeffs.append(None)
                continue
            lam = (yp - yt) * invert(xp - xt, mod) % mod
            coeffs.append((lam, xt, yt))
            x3 = (lam * lam - xt - xp) % mod
            yt = (lam * (xt - x3) - yt) % mod
            xt = x3
    return tuple(coeffs)


def _tate(pp, qq):
    """Reduced Tate pairing e(P, phi(Q)) of two order-r points of E(F_p).

    phi(Q) = (-x_q, i*y_q) enters only through the line evaluations:
    a line with slope lam through (x_t, y_t) evaluates there to
    (lam*(x_q + x_t) - y_t) + y_q*i, an F_{p^2} value whose imaginary
    part is the constant y_q. Verticals stay in F_p and are dropped.
    """
    coeffs = _miller_coefficients((int(pp[0]), int(pp[1])))
    mod = _P
    xq, yq = qq
    f0, f1 = gmpy2.mpz(1), gmpy2.mpz(0)
    idx = 0
    for bit in _R_BITS:
        lam, xt, yt = coeffs[idx]
        idx += 1
        l0 = (lam * (xq + xt) - yt) % mod
        # f <- f^2 * (l0 + yq*i), Karatsuba on the multiply
        g0 = (f0 + f1) * (f0 - f1) % mod
        g1 = 2 * f0 * f1 % mod
        k1 = g0 * l0
        k2 = g1 * yq
        f0 = (k1 - k2) % mod
        f1 = ((g0 + g1) * (l0 + yq) - k1 - k2) % mod
        if bit == "1":
            entry = coeffs[idx]
            idx += 1
            if entry is None:
                continue
            lam, xt, yt = entry
            l0 = (lam * (xq + xt) - yt) % mod
            k1 = f0 * l0
            k2 = f1 * yq
            f0, f1 = (k1 - k2) % mod, ((f0 + f1) * (l0 + yq) - k1 - k2) % mod
    return _final_exponentiation(f0, f1)


def _final_exponentiation(f0, f1):
    """f^((p^2 - 1)/r) with (p^2 - 1)/r = (p - 1) * h.

    f^(p - 1) = conj(f)/f lands in the norm-1 subgroup; the power of
    h = 2^1280 + 4c splits into 1280 cheap squarings and a short tail.
    """
    mod = _P
    d = gmpy2.invert(f0 * f0 + f1 * f1, mod)
    z0 = (f0 * f0 - f1 * f1) * d % mod
    z1 = -2 * f0 * f1 * d % mod
    w0, w1 = z0, z1
    for _ in range(1280):
        w0, w1 = (w0 + w1) * (w0 - w1) % mod, 2 * w0 * w1 % mod
    t0, t1 = _fp2_pow(z0, z1, 4 * H_TAIL)
    return (int((w0 * t0 - w1 * t1) % mod), int((w0 * t1 + w1 * t0) % mod))


def _fp2_pow(a0, a1, k):
    """Square-and-multiply in F_{p^2}; no subgroup assumptions."""
    mod = _P
    r0, r1 = gmpy2.mpz(1), gmpy2.mpz(0)
    for bit in bin(k)[2:]:
        r0, r1 = (r0 + r1) * (r0 - r1) % mod, 2 * r0 * r1 % mod
        if bit == "1":
            r0, r1 = (r0 * a0 - r1 * a1) % mod, (r0 * a1 + r1 * a0) % mod
    return r0, r1


class SupersingularBackend(GroupBackend):
    """Group operations over the fixed 1536-bit supersingular curve."""

    kind = "prod"

    def __init__(self):
        self.order = R

    def __repr__(self) -> str:
        return "SupersingularBackend()"

    def generator(self, side: Side) -> GroupElement:
        if side is Side.SOURCE_A:
            return GroupElement(side, (int(GEN_A[0]), int(GEN_A[1])), R)
        if side is Side.SOURCE_B:
            return GroupElement(side, (int(GEN_B[0]), int(GEN_B[1])), R)
        raise SideMismatchError("the target group has no canonical generator")

    def power(self, x: GroupElement, k: int) -> GroupElement:
        self._check_element(x)
        k = self._check_exponent(k)
        if x.side is Side.TARGET:
            c0, c1 = x.value
            r0, r1 = _fp2_pow(gmpy2.mpz(c0), gmpy2.mpz(c1), k)
            return GroupElement(Side.TARGET, (int(r0), int(r1)), R)
        px, py = x.value
        point = _ec_mul_hot(x.value, (gmpy2.mpz(px), gmpy2.mpz(py)), k)
        if point is None:
            raise ValueError("scalar multiple landed on the identity")
        return GroupElement(x.side, (int(point[0]), int(point[1])), R)

    def pair(self, x: GroupElement, y: GroupElement) -> GroupElement:
        self._check_element(x)
        self._check_element(y)
        if x.side is not Side.SOURCE_A or y.side is not Side.SOURCE_B:
            raise SideMismatchError(
                f"pairing takes (source A, source B), got ({x.side.value}, {y.side.value})"
            )
        px = (gmpy2.mpz(x.value[0]), gmpy2.mpz(x.value[1]))
        py = (gmpy2.mpz(y.value[0]), gmpy2.mpz(y.value[1]))
        return GroupElement(Side.TARGET, _tate(px, py), R)

    def mock_dlog(self, x: GroupElement) -> int:
        raise DlogUnavailableError("dlog unavailable on the production backend")

    def is_identity(self, x: GroupElement) -> bool:
        # Identity elements are unrepresentable here: decode rejects them
        # and power/pair cannot produce them from valid inputs.
        self._check_element(x)
        return False

    def element_width(self, side: Side) -> int:
        return _ELEMENT_BYTES

    def encode(self, x: GroupElement) -> bytes:
        self._check_element(x)
        a, b = x.value
        return a.to_bytes(_COORD_BYTES, "big") + b.to_bytes(_COORD_BYTES, "big")

    def decode(self, data: bytes, side: Side) -> GroupElement:
        if len(data) != _ELEMENT_BYTES:
            raise DecodeError(
                f"expected {_ELEMENT_BYTES} bytes for a curve element, got {len(data)}"
            )
        a = int.from_bytes(data[:_COORD_BYTES], "big")
        b = int.from_bytes(data[_COORD_BYTES:], "big")
        if a >= P or b >= P:
            raise DecodeError("coordinate out of field range")
        if side is Side.TARGET:
            if (a, b) == (0, 0):
                raise DecodeError("zero is not a pairing value")
            if (a, b) == (1, 0):
                raise DecodeError("the identity pairing value is not transportable")
            r0, r1 = _fp2_pow(gmpy2.mpz(a), gmpy2.mpz(b), R)
            if (r0, r1) != (1, 0):
                raise DecodeError("value outside the order-r pairing subgroup")
            return GroupElement(side, (a, b), R)
        if side not in (Side.SOURCE_A, Side.SOURCE_B):
            raise SideMismatchError(f"cannot decode onto side {side!r}")
        ax, ay = gmpy2.mpz(a), gmpy2.mpz(b)
        if not _on_curve(ax, ay):
            raise DecodeError("point is not on the curve")
        if _ec_mul((ax, ay), R) is not None:
            raise DecodeError("point outside the order-r subgroup")
        return GroupElement(side, (a, b), R)

    def params_line(self) -> str:
        return PROD_PARAMS_LINE


def validate_parameters() -> None:
    """Re-check the frozen parameters; raises AssertionError on any defect."""
    assert gmpy2.is_prime(gmpy2.mpz(R), 40), "subgroup order r is not prime"
    assert gmpy2.is_prime(_P, 40), "field prime p is not prime"
    assert P == H * R - 1 and P % 4 == 3
    assert R.bit_length() == 256 and P.bit_length() == 1536
    for gx, gy in (GEN_A, GEN_B):
        pt = (gmpy2.mpz(gx), gmpy2.mpz(gy))
        assert _on_curve(*pt), "generator off curve"
        assert _ec_mul(pt, R) is None, "generator order does not divide r"
    ga = (gmpy2.mpz(GEN_A[0]), gmpy2.mpz(GEN_A[1]))
    gb = (gmpy2.mpz(GEN_B[0]), gmpy2.mpz(GEN_B[1]))
    e = _tate(ga, gb)
    assert e != (1, 0), "degenerate generator pairing"
    assert _fp2_pow(gmpy2.mpz(e[0]), gmpy2.mpz(e[1]), R) == (1, 0)
