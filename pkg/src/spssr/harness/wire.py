"""Binary wire format.

Frame: ``b"SPSR"`` | version (1 byte) | type (1 byte) | payload length
(u32, big-endian) | payload. QUERY payloads carry M, K, L (u16) and q
(u32) followed by the M x (K*L) coefficient matrix packed row-major,
MSB-first, zero-padded. ANSWER payloads carry M (u16) and M u32 symbols.
ERROR payloads carry a u16 code and a UTF-8 message.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import FrameError
from ..scheme import QueryMatrix

MAGIC = b"SPSR"
VERSION = 0x01
QUERY, ANSWER, ERROR = 0x01, 0x02, 0x03
MSG_TYPES = (QUERY, ANSWER, ERROR)

ERR_SHAPE = 0x0001
ERR_BAD_FRAME = 0x0002
ERR_VERSION = 0x0003
ERR_INTERNAL = 0x0004

HEADER = struct.Struct(">4sBBI")
QUERY_HEADER = struct.Struct(">HHHI")
MAX_PAYLOAD = 64 * 1024 * 1024


def pack_bits(bits) -> bytes:
    out = bytearray((len(bits) + 7) // 8)
    for k, b in enumerate(bits):
        if b:
            out[k >> 3] |= 0x80 >> (k & 7)
    return bytes(out)


def unpack_bits(data: bytes, count: int) -> list[int]:
    if len(data) != (count + 7) // 8:
        raise FrameError(f"expected {(count + 7) // 8} bit bytes, got {len(data)}")
    bits = [(data[k >> 3] >> (7 - (k & 7))) & 1 for k in range(count)]
    if count % 8 and data[-1] & (0xFF >> (count % 8)):
        raise FrameError("non-zero padding bits")
    return bits


@dataclass(frozen=True)
class WireFrame:
    msg_type: int
    payload: bytes
    version: int = VERSION

    def encode(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, self.msg_type, len(self.payload)) + self.payload


def parse_header(header: bytes) -> tuple[int, int]:
    """Validate a 10-byte header; returns (msg_type, payload_len)."""
    if len(header) != HEADER.size:
        raise FrameError("truncated frame header")
    magic, version, msg_type, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}", code=ERR_VERSION)
    if msg_type not in MSG_TYPES:
        raise FrameError(f"unknown message type 0x{msg_type:02x}")
    if length > MAX_PAYLOAD:
        raise FrameError(f"payload of {length} bytes exceeds limit")
    return msg_type, length


def decode_frame(data: bytes) -> WireFrame:
    msg_type, length = parse_header(data[:HEADER.size])
    payload = data[HEADER.size:]
    if len(payload) != length:
        raise FrameError(f"payload_len {length} but {len(payload)} bytes follow")
    return WireFrame(msg_type, payload)


def read_frame(stream) -> WireFrame:
    """Read one frame from a binary file-like object (e.g. ``sock.makefile('rb')``).

    The header is validated before any payload byte is read.
    """
    header = stream.read(HEADER.size)
    if not header:
        raise EOFError("connection closed before a frame arrived")
    msg_type, length = parse_header(header)
    payload = stream.read(length) if length else b""
    if len(payload) != length:
        raise FrameError(f"payload truncated: {len(payload)} of {length} bytes")
    return WireFrame(msg_type, payload)


@dataclass(frozen=True)
class QueryPayload:
    M: int
    K: int
    L: int
    q: int
    matrix: QueryMatrix

    def encode(self) -> bytes:
        if self.matrix.shape != (self.M, self.K * self.L):
            raise FrameError("matrix shape disagrees with header")
        return QUERY_HEADER.pack(self.M, self.K, self.L, self.q) + pack_bits(self.matrix.flat())

    @classmethod
    def decode(cls, payload: bytes) -> QueryPayload:
        if len(payload) < QUERY_HEADER.size:
            raise FrameError("query payload shorter than its header")
        M, K, L, q = QUERY_HEADER.unpack_from(payload)
        cols = K * L
        bits = unpack_bits(payload[QUERY_HEADER.size:], M * cols)
        rows = tuple(tuple(bits[m * cols:(m + 1) * cols]) for m in range(M))
        return cls(M, K, L, q, QueryMatrix(rows))


@dataclass(frozen=True)
class AnswerPayload:
    entries: tuple[int, ...]

    def encode(self) -> bytes:
        return struct.pack(f">H{len(self.entries)}I", len(self.entries), *self.entries)

    @classmethod
    def decode(cls, payload: bytes, q: int | None = None) -> AnswerPayload:
        if len(payload) < 2:
            raise FrameError("answer payload shorter than its header")
        (M,) = struct.unpack_from(">H", payload)
        if len(payload) != 2 + 4 * M:
            raise FrameError(f"answer declares {M} entries but carries {len(payload) - 2} bytes")
        entries = struct.unpack_from(f">{M}I", payload, 2)
        if q is not None and any(e >= q for e in entries):
            raise FrameError(f"answer entry not reduced mod {q}")
        return cls(tuple(entries))


@dataclass(frozen=True)
class ErrorPayload:
    code: int
    message: str

    def encode(self) -> bytes:
        return struct.pack(">H", self.code) + self.message.encode("utf-8")

    @classmethod
    def decode(cls, payload: bytes) -> ErrorPayload:
        if len(payload) < 2:
            raise FrameError("error payload shorter than its code")
        (code,) = struct.unpack_from(">H", payload)
        return cls(code, payload[2:].decode("utf-8", errors="replace"))


def query_frame(payload: QueryPayload) -> bytes:
    return WireFrame(QUERY, payload.encode()).encode()


def answer_frame(payload: AnswerPayload) -> bytes:
    return WireFrame(ANSWER, payload.encode()).encode()


def error_frame(code: int, message: str) -> bytes:
    return WireFrame(ERROR, ErrorPayload(code, message).encode()).encode()
