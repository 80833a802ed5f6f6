"""Checks for the curve and pairing layer.

The pairing has no external known-answer source here, so correctness rests
on algebraic properties that would each fail loudly under an arithmetic
slip: group laws, bilinearity, non-degeneracy, Frobenius against plain
exponentiation, and the parameter-based final exponentiation against the
generic big-exponent route.
"""

import random

import pytest

from aacgka import pairing as pr


RNG = random.Random(20260822)


def rand_scalar():
    return RNG.randrange(1, int(pr.R))


def test_parameter_identities():
    p, r, x = int(pr.P), int(pr.R), -pr.X_ABS
    assert r == x**4 - x**2 + 1
    assert p == (x - 1) ** 2 * r // 3 + x
    assert (p**4 - p**2 + 1) % r == 0
    assert (x - 1) ** 2 * (x + p) * (x**2 + p**2 - 1) + 3 == 3 * ((p**4 - p**2 + 1) // r)


def test_generators_on_curve_and_order():
    assert pr.on_curve(pr._G1Field, pr.G1_GEN)
    assert pr.on_curve(pr._G2Field, pr.G2_GEN)
    assert pr.g1_mul(pr.R, pr.G1_GEN) is None
    assert pr.g2_mul(pr.R, pr.G2_GEN) is None


def test_fp2_field_axioms():
    for _ in range(20):
        a = pr.f2(RNG.randrange(int(pr.P)), RNG.randrange(int(pr.P)))
        b = pr.f2(RNG.randrange(int(pr.P)), RNG.randrange(int(pr.P)))
        assert pr.f2_mul(a, b) == pr.f2_mul(b, a)
        if a != pr.F2_ZERO:
            assert pr.f2_mul(a, pr.f2_inv(a)) == pr.F2_ONE
        assert pr.f2_sqr(b) == pr.f2_mul(b, b)


def rand_f12():
    def rf6():
        return tuple(pr.f2(RNG.randrange(int(pr.P)), RNG.randrange(int(pr.P))) for _ in range(3))

    return (rf6(), rf6())


def test_f12_field_axioms():
    for _ in range(5):
        a = rand_f12()
        b = rand_f12()
        assert pr.f12_mul(a, b) == pr.f12_mul(b, a)
        assert pr.f12_sqr(a) == pr.f12_mul(a, a)
        assert pr.f12_mul(a, pr.f12_inv(a)) == pr.F12_ONE


def test_frobenius_matches_plain_power():
    a = rand_f12()
    assert pr.f12_frob(a) == pr.f12_pow(a, int(pr.P))


def test_group_law_g1():
    k1, k2 = rand_scalar(), rand_scalar()
    p1 = pr.g1_mul(k1, pr.G1_GEN)
    p2 = pr.g1_mul(k2, pr.G1_GEN)
    assert pr.g1_add(p1, p2) == pr.g1_mul((k1 + k2) % int(pr.R), pr.G1_GEN)
    assert pr.g1_add(p1, pr.g1_neg(p1)) is None


def test_fixed_base_matches_plain_mul():
    fb = pr.fixed_g1(pr.G1_GEN)
    for _ in range(8):
        k = rand_scalar()
        assert fb.mul(k) == pr.g1_mul(k, pr.G1_GEN)
    assert fb.mul(0) is None


def test_serialization_round_trip_and_rejection():
    pt = pr.g1_mul(rand_scalar(), pr.G1_GEN)
    assert pr.g1_from_bytes(pr.g1_to_bytes(pt)) == pt
    qt = pr.g2_mul(rand_scalar(), pr.G2_GEN)
    assert pr.g2_from_bytes(pr.g2_to_bytes(qt)) == qt
    bad = bytearray(pr.g1_to_bytes(pt))
    bad[-1] ^= 1
    with pytest.raises(pr.CurveError):
        pr.g1_from_bytes(bytes(bad))
    with pytest.raises(pr.CurveError):
        pr.g1_from_bytes(b"\x00" * pr.G1_BYTES)


def test_hash_to_g1_lands_in_subgroup():
    for tag in (b"gen-0", b"gen-1", b"other"):
        pt = pr.hash_to_g1(tag)
        assert pr.on_curve(pr._G1Field, pt)
        assert pr.g1_mul(pr.R, pt) is None
    assert pr.hash_to_g1(b"gen-0") == pr.hash_to_g1(b"gen-0")
    assert pr.hash_to_g1(b"gen-0") != pr.hash_to_g1(b"gen-1")


def test_batch_subgroup_check():
    pts = [pr.g1_mul(rand_scalar(), pr.G1_GEN) for _ in range(3)]
    assert pr.g1_batch_subgroup_check(pts)


def test_pairing_bilinearity():
    a, b = RNG.randrange(2, 1 << 64), RNG.randrange(2, 1 << 64)
    e_base = pr.pairing(pr.G1_GEN, pr.G2_GEN)
    assert not pr.f12_eq_one(e_base)
    lhs = pr.pairing(pr.g1_mul(a, pr.G1_GEN), pr.g2_mul(b, pr.G2_GEN))
    rhs = pr.f12_pow(e_base, a * b)
    assert lhs == rhs


def test_pairing_additive_in_first_argument():
    k1, k2 = rand_scalar(), rand_scalar()
    p1 = pr.g1_mul(k1, pr.G1_GEN)
    p2 = pr.g1_mul(k2, pr.G1_GEN)
    lhs = pr.pairing(pr.g1_add(p1, p2), pr.G2_GEN)
    rhs = pr.f12_mul(pr.pairing(p1, pr.G2_GEN), pr.pairing(p2, pr.G2_GEN))
    assert lhs == rhs


def test_pairing_value_has_order_r():
    e = pr.pairing(pr.G1_GEN, pr.G2_GEN)
    assert pr.f12_eq_one(pr.f12_pow(e, int(pr.R)))


def test_pairing_check_cancellation():
    k = rand_scalar()
    p1 = pr.g1_mul(k, pr.G1_GEN)
    assert pr.pairing_check([(p1, pr.G2_GEN), (pr.g1_neg(p1), pr.G2_GEN)])
    assert not pr.pairing_check([(p1, pr.G2_GEN)])


def test_pairing_swap_relation():
    # e(aP, Q) == e(P, aQ)
    a = rand_scalar()
    lhs = pr.pairing(pr.g1_mul(a, pr.G1_GEN), pr.G2_GEN)
    rhs = pr.pairing(pr.G1_GEN, pr.g2_mul(a, pr.G2_GEN))
    assert lhs == rhs


def test_final_exp_chain_matches_generic():
    f = pr._miller_lines([(pr.G1_GEN, pr.G2_GEN)])
    eased = pr._easy_part(f)
    assert pr._hard_part(eased) == pr._hard_part_generic(eased)
