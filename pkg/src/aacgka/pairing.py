"""BLS12-381 arithmetic: field towers, curve groups, and the ate pairing.

Everything here is plain gmpy2 integer arithmetic. Extension fields are
nested tuples, Fp2 = Fp[u]/(u^2+1), Fp6 = Fp2[v]/(v^3 - (u+1)), and
Fp12 = Fp6[w]/(w^2 - v). Curve points are affine coordinate pairs with None
for the identity. The Miller loop runs on the twist with affine formulas
(field inversion is cheap relative to interpreter overhead here) and line
evaluations enter the accumulator through a sparse multiply. The final
exponentiation uses the parameter-based chain for the hard part; a generic
big-exponent route is kept alongside as a cross-check for the tests.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpz

from .primitives import hash_bytes

P = mpz(0x1A0111EA397FE69A4B1BA7B6434BACD764774B84F38512BF6730D2A0F6B0F6241EABFFFEB153FFFFB9FEFFFFFFFFAAAB)
R = mpz(0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001)
X_ABS = 0xD201000000010000  # curve parameter magnitude; the parameter itself is negative
G1_COFACTOR = mpz(0x396C8C005555E1568C00AAAB0000AAAB)

FP_BYTES = 48
G1_BYTES = 2 * FP_BYTES
G2_BYTES = 4 * FP_BYTES


class CurveError(ValueError):
    """Raised on invalid encodings or points off the expected group."""


# ---- Fp2 ----

F2_ZERO = (mpz(0), mpz(0))
F2_ONE = (mpz(1), mpz(0))


def f2(c0: int, c1: int = 0):
    return (mpz(c0) % P, mpz(c1) % P)


def f2_add(a, b):
    return ((a[0] + b[0]) % P, (a[1] + b[1]) % P)


def f2_sub(a, b):
    return ((a[0] - b[0]) % P, (a[1] - b[1]) % P)


def f2_neg(a):
    return ((-a[0]) % P, (-a[1]) % P)


def f2_conj(a):
    return (a[0], (-a[1]) % P)


def f2_mul(a, b):
    v0 = a[0] * b[0]
    v1 = a[1] * b[1]
    return ((v0 - v1) % P, ((a[0] + a[1]) * (b[0] + b[1]) - v0 - v1) % P)


def f2_sqr(a):
    t = a[0] * a[1]
    return ((a[0] + a[1]) * (a[0] - a[1]) % P, (t + t) % P)


def f2_scale(a, k):
    return (a[0] * k % P, a[1] * k % P)


def f2_mul_xi(a):
    # multiply by xi = 1 + u
    return ((a[0] - a[1]) % P, (a[0] + a[1]) % P)


def f2_inv(a):
    norm = (a[0] * a[0] + a[1] * a[1]) % P
    inv = gmpy2.invert(norm, P)
    return (a[0] * inv % P, (-a[1] * inv) % P)


def f2_pow(a, e: int):
    result = F2_ONE
    base = a
    e = int(e)
    while e:
        if e & 1:
            result = f2_mul(result, base)
        base = f2_sqr(base)
        e >>= 1
    return result


# ---- Fp6 ----

F6_ZERO = (F2_ZERO, F2_ZERO, F2_ZERO)
F6_ONE = (F2_ONE, F2_ZERO, F2_ZERO)


def f6_add(a, b):
    return (f2_add(a[0], b[0]), f2_add(a[1], b[1]), f2_add(a[2], b[2]))


def f6_sub(a, b):
    return (f2_sub(a[0], b[0]), f2_sub(a[1], b[1]), f2_sub(a[2], b[2]))


def f6_neg(a):
    return (f2_neg(a[0]), f2_neg(a[1]), f2_neg(a[2]))


def f6_scale(a, k2):
    return (f2_mul(a[0], k2), f2_mul(a[1], k2), f2_mul(a[2], k2))


def f6_mul(a, b):
    a0, a1, a2 = a
    b0, b1, b2 = b
    v0 = f2_mul(a0, b0)
    v1 = f2_mul(a1, b1)
    v2 = f2_mul(a2, b2)
    c0 = f2_add(v0, f2_mul_xi(f2_sub(f2_mul(f2_add(a1, a2), f2_add(b1, b2)), f2_add(v1, v2))))
    c1 = f2_add(f2_sub(f2_mul(f2_add(a0, a1), f2_add(b0, b1)), f2_add(v0, v1)), f2_mul_xi(v2))
    c2 = f2_add(f2_sub(f2_mul(f2_add(a0, a2), f2_add(b0, b2)), f2_add(v0, v2)), v1)
    return (c0, c1, c2)


def f6_sqr(a):
    return f6_mul(a, a)


def f6_mul_v(a):
    # multiply by v
    return (f2_mul_xi(a[2]), a[0], a[1])


def f6_inv(a):
    a0, a1, a2 = a
    c0 = f2_sub(f2_sqr(a0), f2_mul_xi(f2_mul(a1, a2)))
    c1 = f2_sub(f2_mul_xi(f2_sqr(a2)), f2_mul(a0, a1))
    c2 = f2_sub(f2_sqr(a1), f2_mul(a0, a2))
    den = f2_add(f2_mul(a0, c0), f2_mul_xi(f2_add(f2_mul(a2, c1), f2_mul(a1, c2))))
    inv = f2_inv(den)
    return (f2_mul(c0, inv), f2_mul(c1, inv), f2_mul(c2, inv))


# ---- Fp12 ----

F12_ONE = (F6_ONE, F6_ZERO)


def f12_mul(a, b):
    a0, a1 = a
    b0, b1 = b
    v0 = f6_mul(a0, b0)
    v1 = f6_mul(a1, b1)
    c1 = f6_sub(f6_sub(f6_mul(f6_add(a0, a1), f6_add(b0, b1)), v0), v1)
    return (f6_add(v0, f6_mul_v(v1)), c1)


def f12_sqr(a):
    a0, a1 = a
    v0 = f6_mul(a0, a1)
    c0 = f6_sub(f6_sub(f6_mul(f6_add(a0, a1), f6_add(a0, f6_mul_v(a1))), v0), f6_mul_v(v0))
    return (c0, f6_add(v0, v0))


def f12_conj(a):
    return (a[0], f6_neg(a[1]))


def f12_inv(a):
    a0, a1 = a
    den = f6_sub(f6_sqr(a0), f6_mul_v(f6_sqr(a1)))
    inv = f6_inv(den)
    return (f6_mul(a0, inv), f6_neg(f6_mul(a1, inv)))


def f12_pow(a, e: int):
    result = F12_ONE
    base = a
    e = int(e)
    while e:
        if e & 1:
            result = f12_mul(result, base)
        base = f12_sqr(base)
        e >>= 1
    return result


def f12_eq_one(a) -> bool:
    return a == F12_ONE


def _f6_mul_l1(m, b, c):
    # (m0 + m1 v + m2 v^2) * (b v + c v^2)
    return (
        f2_mul_xi(f2_add(f2_mul(m[1], c), f2_mul(m[2], b))),
        f2_add(f2_mul(m[0], b), f2_mul_xi(f2_mul(m[2], c))),
        f2_add(f2_mul(m[0], c), f2_mul(m[1], b)),
    )


def f12_mul_line(f, a, b, c):
    """Multiply by the sparse element (a, 0, 0) + (0, b, c) w."""
    f0, f1 = f
    t0 = f6_scale(f0, a)
    t1 = _f6_mul_l1(f1, b, c)
    t2 = f6_mul(f6_add(f0, f1), (a, b, c))
    return (f6_add(t0, f6_mul_v(t1)), f6_sub(f6_sub(t2, t0), t1))


# ---- Frobenius ----

_frob_gamma = None


def _gammas():
    global _frob_gamma
    if _frob_gamma is None:
        xi = f2(1, 1)
        g1 = f2_pow(xi, (P - 1) // 6)  # w^p = g1 * w
        g2 = f2_sqr(g1)                # v^p = g2 * v
        g4 = f2_sqr(g2)                # (v^2)^p = g4 * v^2
        _frob_gamma = (g1, g2, g4)
    return _frob_gamma


def f6_frob(a):
    _, g2, g4 = _gammas()
    return (f2_conj(a[0]), f2_mul(f2_conj(a[1]), g2), f2_mul(f2_conj(a[2]), g4))


def f12_frob(a):
    g1, _, _ = _gammas()
    return (f6_frob(a[0]), f6_scale(f6_frob(a[1]), g1))


# ---- curve groups ----
# Affine points: (x, y) with field-specific coordinates, or None for identity.

B1 = mpz(4)
B2 = f2(4, 4)  # twist coefficient 4 * (1 + u)


class _G1Field:
    add = staticmethod(lambda a, b: (a + b) % P)
    sub = staticmethod(lambda a, b: (a - b) % P)
    neg = staticmethod(lambda a: (-a) % P)
    mul = staticmethod(lambda a, b: a * b % P)
    sqr = staticmethod(lambda a: a * a % P)
    inv = staticmethod(lambda a: gmpy2.invert(a, P))
    scale_small = staticmethod(lambda a, k: a * k % P)
    zero = mpz(0)
    b = B1


class _G2Field:
    add = staticmethod(f2_add)
    sub = staticmethod(f2_sub)
    neg = staticmethod(f2_neg)
    mul = staticmethod(f2_mul)
    sqr = staticmethod(f2_sqr)
    inv = staticmethod(f2_inv)
    scale_small = staticmethod(lambda a, k: (a[0] * k % P, a[1] * k % P))
    zero = F2_ZERO
    b = B2


def on_curve(field, pt) -> bool:
    if pt is None:
        return True
    x, y = pt
    return field.sqr(y) == field.add(field.mul(field.sqr(x), x), field.b)


def pt_neg(field, pt):
    if pt is None:
        return None
    return (pt[0], field.neg(pt[1]))


def pt_add(field, p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if y1 != y2 or y1 == field.zero:
            return None
        lam = field.mul(field.scale_small(field.sqr(x1), 3), field.inv(field.scale_small(y1, 2)))
    else:
        lam = field.mul(field.sub(y2, y1), field.inv(field.sub(x2, x1)))
    x3 = field.sub(field.sub(field.sqr(lam), x1), x2)
    y3 = field.sub(field.mul(lam, field.sub(x1, x3)), y1)
    return (x3, y3)


def pt_double(field, pt):
    return pt_add(field, pt, pt)


def pt_mul(field, k: int, pt):
    k = int(k)
    if pt is None or k == 0:
        return None
    if k < 0:
        return pt_mul(field, -k, pt_neg(field, pt))
    result = None
    addend = pt
    while k:
        if k & 1:
            result = pt_add(field, result, addend)
        addend = pt_add(field, addend, addend)
        k >>= 1
    return result


def g1_add(p1, p2):
    return pt_add(_G1Field, p1, p2)


def g1_neg(pt):
    return pt_neg(_G1Field, pt)


def g1_mul(k, pt):
    return pt_mul(_G1Field, k, pt)


def g2_add(p1, p2):
    return pt_add(_G2Field, p1, p2)


def g2_neg(pt):
    return pt_neg(_G2Field, pt)


def g2_mul(k, pt):
    return pt_mul(_G2Field, k, pt)


G1_GEN = (
    mpz(0x17F1D3A73197D7942695638C4FA9AC0FC3688C4F9774B905A14E3A3F171BAC586C55E83FF97A1AEFFB3AF00ADB22C6BB),
    mpz(0x08B3F481E3AAA0F1A09E30ED741D8AE4FCF5E095D5D00AF600DB18CB2C04B3EDD03CC744A2888AE40CAA232946C5E7E1),
)

G2_GEN = (
    (
        mpz(0x024AA2B2F08F0A91260805272DC51051C6E47AD4FA403B02B4510B647AE3D1770BAC0326A805BBEFD48056C8C121BDB8),
        mpz(0x13E02B6052719F607DACD3A088274F65596BD0D09920B61AB5DA61BBDC7F5049334CF11213945D57E5AC7D055D042B7E),
    ),
    (
        mpz(0x0CE5D527727D6E118CC9CDC6DA2E351AADFD9BAA8CBDD3A76D429A695160D12C923AC9CC3BACA289E193548608B82801),
        mpz(0x0606C4A02EA734CC32ACD2B02BC28B99CB3E287E85A763AF267492AB572E99AB3F370D275CEC1DA1AAA9075FF05F79BE),
    ),
)


# ---- fixed-base multiplication ----

_FB_WINDOW = 5


class FixedBase:
    """Precomputed window tables for repeated scalar multiples of one point."""

    def __init__(self, field, pt):
        self.field = field
        self.tables = []
        block = pt
        for _ in range(0, R.bit_length(), _FB_WINDOW):
            row = [None]
            acc = None
            for _ in range((1 << _FB_WINDOW) - 1):
                acc = pt_add(field, acc, block)
                row.append(acc)
            self.tables.append(row)
            block = pt_add(field, acc, block)

    def mul(self, k: int):
        k = int(k) % R
        result = None
        idx = 0
        while k:
            digit = k & ((1 << _FB_WINDOW) - 1)
            if digit:
                result = pt_add(self.field, result, self.tables[idx][digit])
            k >>= _FB_WINDOW
            idx += 1
        return result


_fixed_cache: dict = {}


def fixed_g1(pt) -> FixedBase:
    key = (1, pt[0], pt[1])
    if key not in _fixed_cache:
        _fixed_cache[key] = FixedBase(_G1Field, pt)
    return _fixed_cache[key]


# ---- serialization ----

def _fp_to_bytes(a) -> bytes:
    return int(a).to_bytes(FP_BYTES, "big")


def _fp_from_bytes(buf: bytes):
    value = mpz(int.from_bytes(buf, "big"))
    if value >= P:
        raise CurveError("coordinate out of field range")
    return value


def g1_to_bytes(pt) -> bytes:
    if pt is None:
        raise CurveError("cannot encode the identity point")
    return _fp_to_bytes(pt[0]) + _fp_to_bytes(pt[1])


def g1_from_bytes(buf: bytes, subgroup_check: bool = True):
    if len(buf) != G1_BYTES:
        raise CurveError("bad G1 encoding length")
    pt = (_fp_from_bytes(buf[:FP_BYTES]), _fp_from_bytes(buf[FP_BYTES:]))
    if not on_curve(_G1Field, pt):
        raise CurveError("point not on curve")
    if subgroup_check and g1_mul(R, pt) is not None:
        raise CurveError("point outside the prime-order subgroup")
    return pt


def g1_batch_subgroup_check(points) -> bool:
    """Probabilistic subgroup check for several decoded G1 points at once.

    Folds the points with coefficients derived from their encodings, then
    runs a single order check on the combination.
    """
    points = [pt for pt in points if pt is not None]
    if not points:
        return True
    acc = None
    seed = hash_bytes(b"subgroup" + b"".join(g1_to_bytes(pt) for pt in points))
    for i, pt in enumerate(points):
        coeff = int.from_bytes(hash_bytes(seed + i.to_bytes(4, "big"))[:8], "big") | 1
        acc = g1_add(acc, g1_mul(coeff, pt))
    return g1_mul(R, acc) is None


def g2_to_bytes(pt) -> bytes:
    if pt is None:
        raise CurveError("cannot encode the identity point")
    (x0, x1), (y0, y1) = pt
    return b"".join(_fp_to_bytes(c) for c in (x0, x1, y0, y1))


def g2_from_bytes(buf: bytes, subgroup_check: bool = True):
    if len(buf) != G2_BYTES:
        raise CurveError("bad G2 encoding length")
    c = [_fp_from_bytes(buf[i * FP_BYTES : (i + 1) * FP_BYTES]) for i in range(4)]
    pt = ((c[0], c[1]), (c[2], c[3]))
    if not on_curve(_G2Field, pt):
        raise CurveError("point not on twist curve")
    if subgroup_check and g2_mul(R, pt) is not None:
        raise CurveError("point outside the prime-order subgroup")
    return pt


# ---- hashing to the groups ----

def hash_to_scalar(data: bytes) -> int:
    wide = hash_bytes(data + b"\x00") + hash_bytes(data + b"\x01")
    return int.from_bytes(wide, "big") % int(R)


def hash_to_g1(data: bytes):
    """Derive a G1 point with unknown discrete log, by increment-and-clear."""
    counter = 0
    while True:
        candidate = hash_bytes(b"htc" + data + counter.to_bytes(4, "big"))
        x = mpz(int.from_bytes(candidate + hash_bytes(candidate), "big") % P)
        rhs = (x * x * x + B1) % P
        y = gmpy2.powmod(rhs, (P + 1) // 4, P)
        if y * y % P == rhs:
            if int(y) & 1:
                y = (-y) % P
            pt = g1_mul(G1_COFACTOR, (x, y))
            if pt is not None:
                return pt
        counter += 1


# ---- pairing ----

def _miller_lines(pairs):
    """Shared Miller loop over the parameter magnitude for (P in G1, Q in G2)."""
    state = []
    for p_pt, q_pt in pairs:
        if p_pt is None or q_pt is None:
            raise CurveError("pairing is undefined at the identity")
        xp, yp = p_pt
        # line constant slot: xi * yP; coefficient slots scale by xP
        state.append({"t": q_pt, "q": q_pt, "a": f2(yp, yp), "xp": xp})

    f = F12_ONE
    for bit in bin(X_ABS)[3:]:
        f = f12_sqr(f)
        for s in state:
            xt, yt = s["t"]
            lam = f2_mul(f2_scale(f2_sqr(xt), 3), f2_inv(f2_scale(yt, 2)))
            b = f2_sub(f2_mul(lam, xt), yt)
            c = f2_neg(f2_scale(lam, s["xp"]))
            f = f12_mul_line(f, s["a"], b, c)
            x3 = f2_sub(f2_sub(f2_sqr(lam), xt), xt)
            s["t"] = (x3, f2_sub(f2_mul(lam, f2_sub(xt, x3)), yt))
        if bit == "1":
            for s in state:
                xt, yt = s["t"]
                xq, yq = s["q"]
                lam = f2_mul(f2_sub(yt, yq), f2_inv(f2_sub(xt, xq)))
                b = f2_sub(f2_mul(lam, xq), yq)
                c = f2_neg(f2_scale(lam, s["xp"]))
                f = f12_mul_line(f, s["a"], b, c)
                x3 = f2_sub(f2_sub(f2_sqr(lam), xt), xq)
                s["t"] = (x3, f2_sub(f2_mul(lam, f2_sub(xt, x3)), yt))
    # the curve parameter is negative
    return f12_conj(f)


def _cyc_exp(m, e_abs: int):
    """Exponentiation within the cyclotomic subgroup (positive exponent)."""
    result = F12_ONE
    first = True
    for bit in bin(e_abs)[2:]:
        if not first:
            result = f12_sqr(result)
        first = False
        if bit == "1":
            result = f12_mul(result, m) if result is not F12_ONE else m
    return result


def _exp_x_neg(m):
    # m ** x for the (negative) curve parameter; inverse is conjugation here
    return f12_conj(_cyc_exp(m, X_ABS))


def _easy_part(f):
    g = f12_mul(f12_conj(f), f12_inv(f))
    return f12_mul(f12_frob(f12_frob(g)), g)


def _hard_part(m):
    # m ** (3 * (p^4 - p^2 + 1) / r), decomposed as
    # (x-1)^2 * (x+p) * (x^2 + p^2 - 1) + 3 over the parameter x.
    t1 = f12_conj(_cyc_exp(m, X_ABS + 1))          # m ** (x - 1)
    t2 = f12_conj(_cyc_exp(t1, X_ABS + 1))         # ** (x - 1)
    t3 = f12_mul(_exp_x_neg(t2), f12_frob(t2))     # ** (x + p)
    t4 = f12_mul(
        f12_mul(_cyc_exp(_cyc_exp(t3, X_ABS), X_ABS), f12_frob(f12_frob(t3))),
        f12_conj(t3),
    )                                              # ** (x^2 + p^2 - 1)
    return f12_mul(t4, f12_mul(f12_sqr(m), m))


def _hard_part_generic(m):
    """Plain big-exponent route for the hard part; test oracle for the chain."""
    d3 = 3 * ((int(P) ** 4 - int(P) ** 2 + 1) // int(R))
    return f12_pow(m, d3)


def final_exp(f):
    return _hard_part(_easy_part(f))


def pairing(p_pt, q_pt):
    """e(P, Q) ** 3 for P in G1 and Q in G2; bilinear and non-degenerate."""
    return final_exp(_miller_lines([(p_pt, q_pt)]))


def multi_pairing(pairs):
    """Product of pairings over (P, Q) pairs, sharing one final exponentiation."""
    return final_exp(_miller_lines(pairs))


def pairing_check(pairs) -> bool:
    """True iff the product of pairings over the pairs is the identity."""
    return f12_eq_one(multi_pairing(pairs))
