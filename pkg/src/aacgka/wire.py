"""Canonical binary encoding for every signed or hashed structure.

Values are bytes, text, non-negative integers, lists, and maps. Each value
is framed as tag (1 octet) || length (4 octets, big endian) || body, nested
for containers. Maps are emitted with entries sorted by encoded key, and the
decoder rejects anything that is not in that form, so for every value there
is exactly one byte string that decodes to it.
"""

from __future__ import annotations

TAG_BYTES = 0x01
TAG_TEXT = 0x02
TAG_UINT = 0x03
TAG_LIST = 0x04
TAG_MAP = 0x05

_HEADER = 5
_MAX_LEN = 0xFFFFFFFF

Value = bytes | str | int | list | dict


class WireError(ValueError):
    """Raised on unencodable input or a malformed/non-canonical buffer."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


def _frame(tag: int, body: bytes) -> bytes:
    if len(body) > _MAX_LEN:
        raise WireError("body exceeds 4-octet length range")
    return bytes([tag]) + len(body).to_bytes(4, "big") + body


def encode(value: Value) -> bytes:
    """Encode a value into its unique canonical byte string."""
    if isinstance(value, bool):
        # bool subclasses int; admitting it would alias True with 1.
        raise WireError("bool is not an encodable value")
    if isinstance(value, bytes):
        return _frame(TAG_BYTES, value)
    if isinstance(value, str):
        return _frame(TAG_TEXT, value.encode("utf-8"))
    if isinstance(value, int):
        if value < 0:
            raise WireError("negative integers are not encodable")
        body = b"" if value == 0 else value.to_bytes((value.bit_length() + 7) // 8, "big")
        return _frame(TAG_UINT, body)
    if isinstance(value, (list, tuple)):
        return _frame(TAG_LIST, b"".join(encode(item) for item in value))
    if isinstance(value, dict):
        entries = sorted((encode(k), encode(v)) for k, v in value.items())
        return _frame(TAG_MAP, b"".join(ek + ev for ek, ev in entries))
    raise WireError(f"unencodable type {type(value).__name__}")


def pack(*parts: Value) -> bytes:
    """Encode several values as one list; the concatenation operator for
    signing inputs and KDF contexts."""
    return encode(list(parts))


def _decode_at(buf: bytes, offset: int) -> tuple[Value, int]:
    if offset + _HEADER > len(buf):
        raise WireError("truncated header", offset)
    tag = buf[offset]
    length = int.from_bytes(buf[offset + 1 : offset + 5], "big")
    start = offset + _HEADER
    end = start + length
    if end > len(buf):
        raise WireError("truncated body", offset)
    body = buf[start:end]

    if tag == TAG_BYTES:
        return body, end
    if tag == TAG_TEXT:
        try:
            return body.decode("utf-8"), end
        except UnicodeDecodeError:
            raise WireError("invalid utf-8 text", offset) from None
    if tag == TAG_UINT:
        if length > 0 and body[0] == 0:
            raise WireError("non-minimal integer", offset)
        return int.from_bytes(body, "big"), end
    if tag == TAG_LIST:
        items = []
        pos = start
        while pos < end:
            item, pos = _decode_at(buf, pos)
            items.append(item)
        if pos != end:
            raise WireError("list items overrun frame", offset)
        return items, end
    if tag == TAG_MAP:
        entries = {}
        pos = start
        prev_key = None
        while pos < end:
            key_start = pos
            key, pos = _decode_at(buf, pos)
            encoded_key = buf[key_start:pos]
            if prev_key is not None and encoded_key <= prev_key:
                raise WireError("map keys out of canonical order", key_start)
            prev_key = encoded_key
            if pos >= end:
                raise WireError("map entry missing value", key_start)
            value, pos = _decode_at(buf, pos)
            if isinstance(key, (list, dict)):
                raise WireError("container map key", key_start)
            entries[key] = value
        if pos != end:
            raise WireError("map entries overrun frame", offset)
        return entries, end
    raise WireError(f"unknown tag 0x{tag:02x}", offset)


def decode(buf: bytes) -> Value:
    """Decode one canonical value, rejecting trailing bytes and any
    non-canonical form."""
    value, end = _decode_at(buf, 0)
    if end != len(buf):
        raise WireError("trailing bytes after value", end)
    return value
