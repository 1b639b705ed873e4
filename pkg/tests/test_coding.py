import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microshift import _kernels as K
from microshift.coding import (BitReader, BitWriter, RiceState, RunState, adapt, map_residue,
                               rice_decode, rice_encode, run_decode, run_encode, unmap_residue)
from microshift.errors import TruncatedStreamError


def zigzag_order(xhat, M):
    """Enumerate feasible residues in coding order, straight from the rule."""
    top = 2 ** M - 1
    lo, hi = -xhat, top - xhat
    pos_first = xhat < 2 ** (M - 1)
    order = [0]
    a = 1
    while len(order) < top + 1:
        pair = (a, -a) if pos_first else (-a, a)
        order += [e for e in pair if lo <= e <= hi]
        a += 1
    return order


def test_map_examples():
    assert zigzag_order(3, 3) == [0, 1, -1, 2, -2, 3, -3, 4]
    assert zigzag_order(6, 3) == [0, -1, 1, -2, -3, -4, -5, -6]
    assert map_residue(-2, 3, 3) == 4
    assert map_residue(4, 3, 3) == 7
    assert map_residue(-3, 6, 3) == 4
    assert unmap_residue(7, 3, 3) == 4
    for xhat in range(8):
        assert map_residue(0, xhat, 3) == 0 and unmap_residue(0, xhat, 3) == 0


@pytest.mark.parametrize("M", [2, 3, 4])
def test_map_exhaustive(M):
    for xhat in range(2 ** M):
        order = zigzag_order(xhat, M)
        for code, eps in enumerate(order):
            assert map_residue(eps, xhat, M) == code
            assert unmap_residue(code, xhat, M) == eps
            assert K.map_residue(eps, xhat, M) == code
            assert K.unmap_residue(code, xhat, M) == eps


def test_map_rejects_infeasible():
    with pytest.raises(ValueError):
        map_residue(5, 3, 3)
    with pytest.raises(ValueError):
        unmap_residue(8, 3, 3)


def literal_map(eps, xhat, M):
    """Closed form in terms of the room below (xhat) and above the prediction."""
    room_up = 2 ** M - 1 - xhat
    if eps == 0:
        return 0
    if xhat < 2 ** (M - 1):
        return min(eps - 1, xhat) + eps if eps > 0 else min(-eps, room_up) - eps
    return min(eps, xhat) + eps if eps > 0 else min(-eps - 1, room_up) - eps


@pytest.mark.parametrize("M", [2, 3, 4])
def test_map_agrees_with_closed_form(M):
    for xhat in range(2 ** M):
        for eps in range(-xhat, 2 ** M - xhat):
            assert map_residue(eps, xhat, M) == literal_map(eps, xhat, M)


def rice_string(k, v):
    q = v >> k
    if q >= 24:
        return "1" * 24 + "0" + format(v, "08b")
    return "1" * q + "0" + (format(v & ((1 << k) - 1), f"0{k}b") if k else "")


def bits_of(data, n):
    return "".join(format(b, "08b") for b in data)[:n]


def test_rice_examples():
    for k, v, s in [(2, 0, "000"), (2, 5, "1001"), (0, 3, "1110")]:
        w = BitWriter()
        rice_encode(w, k, v)
        assert bits_of(w.getvalue(), w.bit_length) == s


def test_rice_exhaustive():
    for k in range(8):
        w = BitWriter()
        expect = []
        for v in range(1024):
            if (v >> k) >= 24 and v >= 256:
                continue
            rice_encode(w, k, v)
            expect.append(v)
        stream = "".join(rice_string(k, v) for v in expect)
        assert bits_of(w.getvalue(), w.bit_length) == stream
        r = BitReader(w.getvalue())
        assert [rice_decode(r, k) for _ in expect] == expect


def test_rice_wide_escape_roundtrip():
    for k in range(8):
        w = BitWriter()
        for v in range(1024):
            rice_encode(w, k, v, escape_bits=16)
        r = BitReader(w.getvalue())
        assert [rice_decode(r, k, 16) for _ in range(1024)] == list(range(1024))


def test_rice_escape_overflow_rejected():
    with pytest.raises(ValueError):
        rice_encode(BitWriter(), 0, 300)


def test_kernel_writer_matches_reference():
    rng = np.random.default_rng(3)
    wacc = np.zeros(1, np.int64)
    wn = np.zeros(1, np.int64)
    out = np.zeros((1, 1 << 16), np.uint8)
    olen = np.zeros(1, np.int64)
    ref = BitWriter()
    for _ in range(3000):
        k = int(rng.integers(0, 8))
        v = int(rng.integers(0, 400))
        K.put_rice(0, k, v, 16, wacc, wn, out, olen)
        rice_encode(ref, k, v, 16)
    data = out[0, :olen[0]].tobytes()
    if wn[0]:
        data += bytes([(int(wacc[0]) << (8 - int(wn[0]))) & 255])
    assert data == ref.getvalue()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 2 ** 32 - 1))
def test_bit_cursor_roundtrip(n, seed):
    bits = np.random.default_rng(seed).integers(0, 2, n)
    w = BitWriter()
    for b in bits:
        w.write_bit(int(b))
    data = w.getvalue()
    assert len(data) == (n + 7) // 8
    unpacked = np.unpackbits(np.frombuffer(data, np.uint8))
    assert np.array_equal(unpacked[:n], bits)
    assert not unpacked[n:].any()
    r = BitReader(data)
    assert all(r.read_bit() == b for b in bits[: min(n, 5000)])


def test_reader_past_end():
    r = BitReader(b"\xff")
    r.read(8)
    with pytest.raises(TruncatedStreamError):
        r.read_bit()
    with pytest.raises(TruncatedStreamError):
        rice_decode(BitReader(b"\xff\xff"), 2)


def test_adapt_examples():
    s = RiceState()
    assert adapt(s, 5) == 0
    assert RiceState(4, 9).k() == 2
    s = RiceState(63, 100)
    s.update(3)
    assert (s.count, s.acc) == (32, 52)


def test_adapt_matches_kernel_rule():
    rng = np.random.default_rng(0)
    s = RiceState()
    for _ in range(2000):
        k = s.k()
        assert K.rice_k(s.count, s.acc) == k
        assert s.count << k >= s.acc and (k == 0 or s.count << (k - 1) < s.acc)
        s.update(int(rng.integers(0, 16)))
        assert 1 <= s.count < 64


def test_run_roundtrip():
    rng = np.random.default_rng(7)
    lengths = [0] + rng.integers(0, 1001, 500).tolist()
    w = BitWriter()
    enc = RiceState()
    for n in lengths:
        run_encode(w, enc, n)
    r = BitReader(w.getvalue())
    dec = RiceState()
    assert [run_decode(r, dec) for _ in lengths] == lengths
    assert enc == dec


def test_run_zero_is_one_code():
    w = BitWriter()
    run_encode(w, RiceState(), 0)
    assert bits_of(w.getvalue(), w.bit_length) == "0"
    assert RunState().length == 0
