"""Context modelling for the first subimage and inter-subimage prediction.

The causal template lives in subimage coordinates: A is the left neighbour,
B the one above, C above-left, D above-right and E two to the left.  Its
texture vector (A-C, C-B, D-A, B-E) is clamped to [-2, 2] per component and
folded with its negation, which leaves 313 contexts.  Each context maps to a
learned offset from B.
"""

import os
import struct
import zlib
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import heuristic_estimate
from .errors import ContainerError

T_CLAMP = 2
N_CONTEXTS = 313
TABLE_MAGIC = b"MSHD"
TABLE_VERSION = 1


@dataclass(frozen=True)
class CausalTemplate:
    A: int
    B: int
    C: int
    D: int
    E: int
    first: bool = False


def causal_template(sub, r, c):
    """Template for position (r, c) of the 2-D subimage array ``sub``.

    Missing left neighbours copy B, missing upper ones copy A.  At the very
    first position every neighbour is absent and ``first`` is set.
    """
    h, w = sub.shape
    if r == 0 and c == 0:
        return CausalTemplate(0, 0, 0, 0, 0, True)
    if r == 0:
        a = int(sub[0, c - 1])
        e = int(sub[0, c - 2]) if c >= 2 else a
        return CausalTemplate(a, a, a, a, e)
    b = int(sub[r - 1, c])
    a = int(sub[r, c - 1]) if c >= 1 else b
    cc = int(sub[r - 1, c - 1]) if c >= 1 else b
    d = int(sub[r - 1, c + 1]) if c + 1 < w else a
    e = int(sub[r, c - 2]) if c >= 2 else b
    return CausalTemplate(a, b, cc, d, e)


def texture_vector(t):
    return (t.A - t.C, t.C - t.B, t.D - t.A, t.B - t.E)


def context_id(v, T=T_CLAMP):
    """Return (index, sign) of a texture vector."""
    if T != T_CLAMP:
        raise ValueError("only T=2 is supported")
    b = [max(-T, min(T, int(x))) for x in v]
    sign = 1
    for x in b:
        if x:
            if x < 0:
                sign = -1
                b = [-y for y in b]
            break
    raw = (((b[0] + 2) * 5 + (b[1] + 2)) * 5 + (b[2] + 2)) * 5 + (b[3] + 2)
    return raw - 312, sign


@dataclass(frozen=True)
class PredictorTable:
    M: int
    entries: tuple
    T: int = T_CLAMP

    def __post_init__(self):
        if len(self.entries) != N_CONTEXTS:
            raise ValueError(f"table needs {N_CONTEXTS} entries")
        lim = (1 << self.M) - 1
        if any(abs(int(e)) > lim for e in self.entries):
            raise ValueError(f"entries must lie in [-{lim}, {lim}]")
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @property
    def checksum(self):
        return zlib.crc32(self.entry_bytes()) & 0xFFFFFFFF

    def entry_bytes(self):
        return np.asarray(self.entries, dtype=np.int8).tobytes()

    def as_array(self):
        return np.asarray(self.entries, dtype=np.int32)

    def to_bytes(self):
        head = struct.pack("<4sBBBH", TABLE_MAGIC, TABLE_VERSION, self.M, self.T, N_CONTEXTS)
        return head + self.entry_bytes() + struct.pack("<I", self.checksum)

    @classmethod
    def from_bytes(cls, data):
        head = struct.calcsize("<4sBBBH")
        if len(data) != head + N_CONTEXTS + 4:
            raise ContainerError("predictor table has the wrong size")
        magic, version, M, T, count = struct.unpack_from("<4sBBBH", data)
        if magic != TABLE_MAGIC or version != TABLE_VERSION:
            raise ContainerError("not a predictor table file")
        if count != N_CONTEXTS or T != T_CLAMP:
            raise ContainerError("unsupported table layout")
        raw = data[head:head + N_CONTEXTS]
        (crc,) = struct.unpack_from("<I", data, head + N_CONTEXTS)
        if crc != zlib.crc32(raw) & 0xFFFFFFFF:
            raise ContainerError("predictor table checksum mismatch")
        return cls(M, tuple(np.frombuffer(raw, dtype=np.int8).tolist()), T)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def default_table(M=3):
    """The table shipped with the package for quantizer resolution M."""
    ref = resources.files(__package__).joinpath("data", f"table_m{M}.msd")
    try:
        return PredictorTable.from_bytes(ref.read_bytes())
    except FileNotFoundError:
        raise ValueError(f"no built-in table for M={M}") from None


def predict_intra(t, table):
    top = (1 << table.M) - 1
    if t.first:
        return 1 << (table.M - 1)
    idx, sign = context_id(texture_vector(t))
    return min(top, max(0, t.B + sign * table.entries[idx]))


def predict_med(t, M):
    """Median edge detector, used only as a reference predictor."""
    if t.first:
        return 1 << (M - 1)
    a, b, c = t.A, t.B, t.C
    if c >= max(a, b):
        return min(a, b)
    if c <= min(a, b):
        return max(a, b)
    return a + b - c


def predict_inter(block_obs, j, params):
    """Predicted level of subimage ``j`` from same-block observations.

    ``block_obs`` holds (level, shift) pairs of already coded positions in the
    block, nearest to the target first.
    """
    est, _ = heuristic_estimate(block_obs, params)
    return ((est + params.shifts[j - 1]) & 255) // params.delta


def inter_offsets(N):
    """Per pattern position, the earlier positions of its block ordered by
    distance (ties row-major), as (dr, dc) offsets."""
    out = []
    for t in range(N * N):
        r, c = divmod(t, N)
        prev = [divmod(u, N) for u in range(t)]
        prev.sort(key=lambda p: ((p[0] - r) ** 2 + (p[1] - c) ** 2, p[0], p[1]))
        out.append([(pr - r, pc - c) for pr, pc in prev])
    return out


def block_observations(levels, r, c, params, available=None):
    """(level, shift) observations for inter prediction at (r, c)."""
    h, w = levels.shape
    N = params.N
    t = (r % N) * N + c % N
    obs = []
    for dr, dc in inter_offsets(N)[t]:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and (available is None or available[rr, cc]):
            obs.append((int(levels[rr, cc]), params.shifts[(rr % N) * N + cc % N]))
    return obs


def subimage(levels, j, N):
    """The 2-D array of positions belonging to subimage j (1-based)."""
    ri, ci = divmod(j - 1, N)
    return levels[ri::N, ci::N]


def train_table(corpus, params):
    """Learn the 313 context offsets from an iterable of 2-D planes."""
    from .core import microshift_quantize

    lim = params.levels - 1
    hist = np.zeros((N_CONTEXTS, 2 * lim + 1), dtype=np.int64)
    seen = 0
    for plane in corpus:
        seen += 1
        sub = np.ascontiguousarray(subimage(microshift_quantize(plane, params).levels, 1, params.N))
        _accumulate(sub, hist, lim)
    if not seen:
        raise ValueError("empty training corpus")
    return PredictorTable(params.M, tuple(_argmax_entries(hist, lim)))


def _accumulate(sub, hist, lim):
    from ._kernels import accumulate_histogram

    accumulate_histogram(sub.astype(np.int32), hist, lim)


def _argmax_entries(hist, lim):
    values = np.arange(-lim, lim + 1)
    # tie-break: smaller magnitude first, then the positive value
    order = np.lexsort((-values, np.abs(values)))
    out = []
    for row in hist:
        best = order[np.argmax(row[order])] if row.any() else lim
        out.append(int(values[best]))
    return out


def load_table(path=None, M=3):
    if path is None:
        return default_table(M)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return PredictorTable.load(path)
