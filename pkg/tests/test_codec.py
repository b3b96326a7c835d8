import numpy as np
import pytest

from cealsim.codec import DecodeError, Message, check_capacity, decode, encode, message_size_bound
from cealsim.quant import QuantizedVector, quantize


def _qv(levels, p):
    return QuantizedVector(levels=levels, precision=0.5, radius=1.0, num_intervals=p)


class TestWorkedExamples:
    """Unary sign-bit strings for the signed offsets -3, +4 and 0."""

    def test_minus_three(self):
        # p=8 puts the midpoint at level 4; level 1 has offset -3.
        assert encode(_qv([1], 8)).to_bitstring() == "01110"

    def test_plus_four(self):
        assert encode(_qv([8], 8)).to_bitstring() == "111110"

    def test_zero_offset(self):
        assert encode(_qv([4], 8)).to_bitstring() == "10"

    def test_decode_inverse_of_examples(self):
        msg = Message(data=bytes([0b01110000]), bit_count=5)
        assert decode(msg, 1, 0.5, 1.0, 8).levels[0] == 1
        msg = Message(data=bytes([0b10000000]), bit_count=2)
        assert decode(msg, 1, 0.5, 1.0, 8).levels[0] == 4


def test_roundtrip_random_vectors():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        d = int(rng.integers(1, 12))
        p = int(rng.integers(1, 300))
        q = _qv(rng.integers(0, p + 1, d), p)
        back = decode(encode(q), d, q.precision, q.radius, p)
        assert np.array_equal(back.levels, q.levels)
        assert back.num_intervals == p


def test_exact_size_law():
    rng = np.random.default_rng(11)
    for _ in range(500):
        d = int(rng.integers(1, 12))
        p = int(rng.integers(1, 300))
        q = _qv(rng.integers(0, p + 1, d), p)
        assert encode(q).bit_count == 2 * d + int(np.sum(np.abs(q.offsets)))


def test_size_bound_on_quantized_vectors():
    """bit_count <= d(3 + 2(r/eps + 1)) for any ||y|| <= r at accuracy eps."""
    rng = np.random.default_rng(12)
    for _ in range(500):
        d = int(rng.integers(1, 16))
        r = 10.0 ** rng.uniform(-1, 1)
        y = rng.standard_normal(d)
        y *= rng.uniform(0, 1) * r / np.linalg.norm(y)
        eps = r * 10.0 ** rng.uniform(-2, 0.5)
        q = quantize(y, eps, r, rng)
        assert encode(q).bit_count <= message_size_bound(d, eps, r)


class TestDecodeErrors:
    def test_truncated(self):
        msg = encode(_qv([1], 8))
        bad = Message(data=msg.data, bit_count=msg.bit_count)
        with pytest.raises(DecodeError, match="truncated"):
            decode(bad, 2, 0.5, 1.0, 8)

    def test_trailing_bits(self):
        msg = encode(_qv([1, 5], 8))
        with pytest.raises(DecodeError, match="trailing"):
            decode(msg, 1, 0.5, 1.0, 8)

    def test_out_of_range_level(self):
        # offset +7 on a p=8 grid decodes to level 11 > p.
        writer_bits = "1" + "1" * 7 + "0"
        data = int(writer_bits, 2) << (16 - len(writer_bits))
        msg = Message(data=data.to_bytes(2, "big"), bit_count=len(writer_bits))
        with pytest.raises(DecodeError, match="corrupt"):
            decode(msg, 1, 0.5, 1.0, 8)


def test_capacity_boundary():
    msg = encode(_qv([0, 8], 8))  # 2d + 4 + 4 = 12 bits
    assert msg.bit_count == 12
    assert check_capacity(msg, 12) is True
    assert check_capacity(msg, 11) is False


def test_bitstring_matches_packed_bytes():
    q = _qv([0, 4, 8], 8)
    msg = encode(q)
    s = msg.to_bitstring()
    assert len(s) == msg.bit_count
    # first coordinate: sign 0 then four ones then terminator
    assert s.startswith("011110")
    # repack manually from the string
    val = int(s, 2) << (8 * len(msg.data) - msg.bit_count)
    assert val.to_bytes(len(msg.data), "big") == msg.data
