"""Single-pass raster encoder.

Rows arrive one at a time.  Each pixel is shifted, quantized and routed to
the stream of its subimage, where it is either absorbed into a run or
predicted and Rice coded.  Only the last N + 1 rows of levels are kept.
"""

import numpy as np

from . import _kernels as K
from .container import CompressedContainer
from .context import default_table, inter_offsets
from .core import make_params
from .pixelio import MultiPlaneImage


def _offset_arrays(N):
    offs = inter_offsets(N)
    nn = N * N
    dr = np.zeros((nn, max(nn - 1, 1)), dtype=np.int64)
    dc = np.zeros_like(dr)
    n = np.zeros(nn, dtype=np.int64)
    for t, lst in enumerate(offs):
        n[t] = len(lst)
        for m, (a, b) in enumerate(lst):
            dr[t, m] = a
            dc[t, m] = b
    return dr, dc, n


class StreamEncoder:
    """Encoder for one plane fed row by row.

    >>> enc = StreamEncoder(width, params, table)
    >>> for row in rows: enc.push_row(row)
    >>> streams = enc.finish()
    """

    def __init__(self, width, params, table):
        if table.M != params.M:
            raise ValueError(f"table is for M={table.M}, codec uses M={params.M}")
        if not 0 < width <= 65535:
            raise ValueError("width out of range")
        self.width = width
        self.params = params
        self.table = table
        self.rows = 0
        nn = params.n_sub
        N = params.N
        self._shifts = np.asarray(params.shifts, dtype=np.int64)
        self._table = table.as_array().astype(np.int64)
        self._dr, self._dc, self._n = _offset_arrays(N)
        self._buf = np.zeros((N + 1, width), dtype=np.int64)
        self._cnt = np.ones(nn, dtype=np.int64)
        self._acc = np.zeros(nn, dtype=np.int64)
        self._rcnt = np.ones(nn, dtype=np.int64)
        self._racc = np.zeros(nn, dtype=np.int64)
        self._run_on = np.zeros(nn, dtype=np.int64)
        self._run_len = np.zeros(nn, dtype=np.int64)
        self._wacc = np.zeros(nn, dtype=np.int64)
        self._wn = np.zeros(nn, dtype=np.int64)
        # worst case per pixel is a 41-bit run escape plus one residue code
        self._out = np.zeros((nn, 8 * (width // N + 2)), dtype=np.uint8)
        self._olen = np.zeros(nn, dtype=np.int64)
        self._sinks = [bytearray() for _ in range(nn)]

    def push_row(self, row):
        row = np.asarray(row)
        if row.shape != (self.width,):
            raise ValueError(f"row of shape {row.shape}, expected ({self.width},)")
        if self.rows >= 65535:
            raise ValueError("image taller than 65535 rows")
        p = self.params
        self._olen[:] = 0
        K.encode_row(row.astype(np.int64), self.rows, self._buf, self.width, p.M, p.N, p.delta,
                     self._shifts, self._table, self._dr, self._dc, self._n,
                     self._cnt, self._acc, self._rcnt, self._racc, self._run_on, self._run_len,
                     self._wacc, self._wn, self._out, self._olen)
        for j, n in enumerate(self._olen):
            if n:
                self._sinks[j] += self._out[j, :n].tobytes()
        self.rows += 1

    def state_nbytes(self):
        """Bytes of retained state, excluding already emitted output."""
        arrays = (self._buf, self._cnt, self._acc, self._rcnt, self._racc, self._run_on,
                  self._run_len, self._wacc, self._wn, self._out, self._olen, self._shifts,
                  self._table, self._dr, self._dc, self._n)
        return sum(a.nbytes for a in arrays)

    def finish(self):
        """Flush pending bits and return the N^2 byte strings."""
        if self.rows == 0:
            raise ValueError("no rows were pushed")
        out = []
        for j, sink in enumerate(self._sinks):
            n = int(self._wn[j])
            if n:
                sink.append((int(self._wacc[j]) << (8 - n)) & 255)
                self._wn[j] = 0
            out.append(bytes(sink))
        return out


def encode_plane(rows, params, table, width=None, height=None):
    """Encode rows from any iterable; returns (streams, height)."""
    enc = None
    for row in rows:
        if enc is None:
            enc = StreamEncoder(width or len(row), params, table)
        enc.push_row(row)
    if enc is None:
        raise ValueError("empty row producer")
    if height is not None and enc.rows != height:
        raise ValueError(f"producer yielded {enc.rows} rows, expected {height}")
    return enc.finish(), enc.rows


def encode_image(img, params=None, table=None):
    if isinstance(img, np.ndarray):
        img = MultiPlaneImage.gray(img) if img.ndim == 2 else MultiPlaneImage.rgb(img)
    params = params or make_params()
    table = table or default_table(params.M)
    planes = []
    for plane in img.planes:
        streams, _ = encode_plane(iter(plane), params, table, img.width, img.height)
        planes.append(streams)
    return CompressedContainer(params.M, params.N, img.width, img.height, table.checksum, planes)
