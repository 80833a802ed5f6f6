"""Canonical codec: identity, uniqueness, strict rejection."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aacgka.wire import WireError, decode, encode, pack


# hand-derived framings: tag, 4-octet big-endian length, body
FROZEN = [
    (0, bytes.fromhex("0300000000")),
    (1, bytes.fromhex("030000000101")),
    (256, bytes.fromhex("03000000020100")),
    (b"ab", bytes.fromhex("01000000026162")),
    ("hi", bytes.fromhex("02000000026869")),
    ([1], bytes.fromhex("0400000006") + bytes.fromhex("030000000101")),
    ({}, bytes.fromhex("0500000000")),
]


@pytest.mark.parametrize("value,expected", FROZEN)
def test_frozen_encodings(value, expected):
    assert encode(value) == expected
    assert decode(expected) == value


def test_map_entries_sorted_by_encoded_key():
    buf = encode({"b": 1, "a": 2, "c": 0})
    assert buf == encode({"a": 2, "c": 0, "b": 1})
    inner = buf[5:]
    assert inner.index(encode("a")) < inner.index(encode("b")) < inner.index(encode("c"))


def test_pack_is_list_encoding():
    assert pack("x", 5) == encode(["x", 5])


scalars = st.one_of(
    st.binary(max_size=12),
    st.text(max_size=8),
    st.integers(min_value=0, max_value=1 << 70),
)
values = st.recursive(
    scalars,
    lambda children: st.one_of(
        st.lists(children, max_size=4),
        st.dictionaries(scalars, children, max_size=4),
    ),
    max_leaves=12,
)


@settings(max_examples=150, deadline=None)
@given(values)
def test_round_trip_identity(value):
    assert decode(encode(value)) == value


@settings(max_examples=80, deadline=None)
@given(values, values)
def test_encoding_unique_per_value(a, b):
    # one byte string per value, one value per byte string
    assert (encode(a) == encode(b)) == (a == b)


def test_rejects_unsorted_map():
    key_b, key_a = encode("b") + encode(1), encode("a") + encode(2)
    body = key_b + key_a
    buf = bytes([0x05]) + len(body).to_bytes(4, "big") + body
    with pytest.raises(WireError):
        decode(buf)


def test_rejects_duplicate_map_key():
    entry = encode("a") + encode(1)
    body = entry + entry
    buf = bytes([0x05]) + len(body).to_bytes(4, "big") + body
    with pytest.raises(WireError):
        decode(buf)


def test_rejects_non_minimal_uint():
    buf = bytes([0x03]) + (2).to_bytes(4, "big") + b"\x00\x01"
    with pytest.raises(WireError):
        decode(buf)


def test_rejects_trailing_truncated_and_bad_tag():
    good = encode(7)
    with pytest.raises(WireError):
        decode(good + b"\x00")
    with pytest.raises(WireError):
        decode(good[:-1])
    with pytest.raises(WireError):
        decode(b"\x09\x00\x00\x00\x00")
    with pytest.raises(WireError):
        decode(b"")


def test_rejects_bad_utf8():
    buf = bytes([0x02]) + (1).to_bytes(4, "big") + b"\xff"
    with pytest.raises(WireError):
        decode(buf)


def test_rejects_unencodable():
    with pytest.raises(WireError):
        encode(-1)
    with pytest.raises(WireError):
        encode(True)
    with pytest.raises(WireError):
        encode(1.5)


def test_error_carries_offset():
    try:
        decode(encode(7) + b"\x00")
    except WireError as exc:
        assert exc.offset == len(encode(7))
