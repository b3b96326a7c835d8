"""Sign-bit + unary codec for quantized vectors, with exact bit counting.

Wire format, bit-exact: for each coordinate i = 1..d, in index order,

    [sign bit][ |offset_i| one-bits ][0 terminator]

where offset_i = level_i - floor(p/2) is the signed level offset from the
grid midpoint, the sign bit is 1 for offset_i >= 0 and 0 for negative,
and the run of ones has length |offset_i|.  The terminator makes the
concatenated stream uniquely decodable.  Total size is exactly

    bit_count = 2*d + sum_i |offset_i|

Bits are packed most-significant-bit first into a byte buffer; the final
byte is zero-padded.  Grid metadata (d, eps, r, p) travels out of band:
both endpoints derive it from the shared schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .quant import QuantizedVector

__all__ = [
    "Message",
    "DecodeError",
    "encode",
    "decode",
    "check_capacity",
    "message_size_bound",
]


class DecodeError(ValueError):
    """Raised for truncated, malformed, or out-of-range bit streams."""


@dataclass(frozen=True)
class Message:
    """A framed bit string: packed bytes plus the exact bit length."""

    data: bytes
    bit_count: int

    def __post_init__(self):
        if self.bit_count < 0 or len(self.data) != (self.bit_count + 7) // 8:
            raise ValueError("data length inconsistent with bit_count")

    def to_bitstring(self) -> str:
        """The message as a '0'/'1' string (for tests and documentation)."""
        out = []
        for i in range(self.bit_count):
            byte = self.data[i >> 3]
            out.append("1" if (byte >> (7 - (i & 7))) & 1 else "0")
        return "".join(out)


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def write_bit(self, bit: int):
        self.acc = (self.acc << 1) | bit
        self.nbits += 1
        if self.nbits % 8 == 0:
            self.buf.append(self.acc & 0xFF)
            self.acc = 0

    def write_run(self, bit: int, count: int):
        for _ in range(count):
            self.write_bit(bit)

    def message(self) -> Message:
        tail = self.nbits % 8
        data = bytes(self.buf) + (bytes([(self.acc << (8 - tail)) & 0xFF]) if tail else b"")
        return Message(data=data, bit_count=self.nbits)


class _BitReader:
    def __init__(self, msg: Message):
        self.msg = msg
        self.pos = 0

    def read_bit(self) -> int:
        if self.pos >= self.msg.bit_count:
            raise DecodeError("truncated message: ran past the declared bit count")
        byte = self.msg.data[self.pos >> 3]
        bit = (byte >> (7 - (self.pos & 7))) & 1
        self.pos += 1
        return bit

    def read_unary(self) -> int:
        """Count ones up to the 0 terminator."""
        n = 0
        while self.read_bit():
            n += 1
        return n


def encode(q: QuantizedVector) -> Message:
    """Encode signed level offsets; bit_count = 2d + sum |offsets|."""
    w = _BitWriter()
    for off in q.offsets:
        off = int(off)
        w.write_bit(1 if off >= 0 else 0)
        w.write_run(1, abs(off))
        w.write_bit(0)
    return w.message()


def decode(
    msg: Message,
    dim: int,
    precision: float,
    radius: float,
    num_intervals: int,
) -> QuantizedVector:
    """Exact inverse of encode, given the out-of-band grid metadata."""
    r = _BitReader(msg)
    mid = num_intervals // 2
    levels = []
    for _ in range(dim):
        sign = 1 if r.read_bit() else -1
        level = mid + sign * r.read_unary()
        if level < 0 or level > num_intervals:
            raise DecodeError(
                f"decoded level {level} outside [0, {num_intervals}]: corrupt stream"
            )
        levels.append(level)
    if r.pos != msg.bit_count:
        raise DecodeError(
            f"{msg.bit_count - r.pos} trailing bits after {dim} coordinates"
        )
    return QuantizedVector(
        levels=levels, precision=precision, radius=radius, num_intervals=num_intervals
    )


def check_capacity(msg: Message, capacity: int) -> bool:
    """True iff the message fits a channel of `capacity` bits per use."""
    return msg.bit_count <= capacity


def message_size_bound(dim: int, precision: float, radius: float) -> float:
    """Deterministic size bound d*(3 + 2*(r/eps + 1)) for any encoded
    quantization of a vector with ||y|| <= r at accuracy eps."""
    return dim * (3.0 + 2.0 * (radius / precision + 1.0))
