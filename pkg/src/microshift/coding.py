"""Residue mapping, adaptive Rice coding and run-length coding.

This is the readable reference coder.  The per-pixel loops used by the
encoder and decoder live in ``_kernels`` and follow the same rules; the test
suite checks the two produce identical bitstreams.
"""

from dataclasses import dataclass

from .errors import TruncatedStreamError

ESCAPE_Q = 24
RESIDUE_ESCAPE_BITS = 8
RUN_ESCAPE_BITS = 16
RESET = 64


def map_residue(eps, xhat, M):
    """Position of ``eps`` in the zigzag over feasible residues.

    The side with more room gets the odd slots first: positive residues come
    first when ``xhat`` is in the lower half of the range.  Once the shorter
    side runs out the remaining values continue in order on the longer side.
    """
    top = (1 << M) - 1
    pos, neg = top - xhat, xhat
    if not -neg <= eps <= pos:
        raise ValueError(f"residue {eps} infeasible for prediction {xhat}")
    if eps == 0:
        return 0
    s = min(pos, neg)
    a = abs(eps)
    if a > s:
        return s + a
    positive_first = xhat < (1 << (M - 1))
    first = (eps > 0) == positive_first
    return 2 * a - 1 if first else 2 * a


def unmap_residue(code, xhat, M):
    top = (1 << M) - 1
    if not 0 <= code <= top:
        raise ValueError(f"code {code} out of range")
    pos, neg = top - xhat, xhat
    s = min(pos, neg)
    if code == 0:
        return 0
    if code > 2 * s:
        a = code - s
        return a if pos > neg else -a
    a = (code + 1) // 2
    positive_first = xhat < (1 << (M - 1))
    if code & 1:
        return a if positive_first else -a
    return -a if positive_first else a


class BitWriter:
    """MSB-first bit sink."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0

    def write(self, value, nbits):
        for i in range(nbits - 1, -1, -1):
            self.write_bit((value >> i) & 1)

    def write_bit(self, bit):
        self._acc = (self._acc << 1) | (bit & 1)
        self._n += 1
        if self._n == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._n = 0

    @property
    def bit_length(self):
        return 8 * len(self._buf) + self._n

    def getvalue(self):
        """Bytes written so far, last byte zero padded."""
        if self._n:
            return bytes(self._buf) + bytes([self._acc << (8 - self._n)])
        return bytes(self._buf)


class BitReader:
    def __init__(self, data):
        self._data = bytes(data)
        self._pos = 0

    @property
    def position(self):
        return self._pos

    def read_bit(self):
        byte = self._pos >> 3
        if byte >= len(self._data):
            raise TruncatedStreamError("read past end of stream")
        bit = (self._data[byte] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read(self, nbits):
        v = 0
        for _ in range(nbits):
            v = (v << 1) | self.read_bit()
        return v


def rice_encode(writer, k, v, escape_bits=RESIDUE_ESCAPE_BITS):
    if v < 0:
        raise ValueError("negative value")
    q = v >> k
    if q >= ESCAPE_Q:
        if v >= 1 << escape_bits:
            raise ValueError(f"{v} does not fit the {escape_bits}-bit escape")
        writer.write((1 << ESCAPE_Q) - 1, ESCAPE_Q)
        writer.write_bit(0)
        writer.write(v, escape_bits)
        return
    for _ in range(q):
        writer.write_bit(1)
    writer.write_bit(0)
    writer.write(v & ((1 << k) - 1), k)


def rice_decode(reader, k, escape_bits=RESIDUE_ESCAPE_BITS):
    q = 0
    while reader.read_bit():
        q += 1
        if q == ESCAPE_Q:
            if reader.read_bit():
                raise TruncatedStreamError("malformed escape code")
            return reader.read(escape_bits)
    return (q << k) | reader.read(k)


@dataclass
class RiceState:
    count: int = 1
    acc: int = 0

    def k(self):
        k = 0
        while (self.count << k) < self.acc:
            k += 1
        return k

    def update(self, mapped):
        self.acc += mapped
        self.count += 1
        if self.count >= RESET:
            self.count = (self.count + 1) >> 1
            self.acc = (self.acc + 1) >> 1


def adapt(state, mapped):
    """Return the parameter for the current sample, then fold it in."""
    k = state.k()
    state.update(mapped)
    return k


@dataclass
class RunState:
    active: bool = False
    length: int = 0


def run_encode(writer, state, length):
    rice_encode(writer, adapt(state, length), length, RUN_ESCAPE_BITS)


def run_decode(reader, state):
    k = state.k()
    length = rice_decode(reader, k, RUN_ESCAPE_BITS)
    state.update(length)
    return length
