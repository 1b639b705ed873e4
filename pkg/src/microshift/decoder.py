"""Lossless-stage decoder: rebuild the level image from the subimage streams."""

import warnings

import numpy as np

from . import _kernels as K
from .context import default_table
from .core import QuantizedImage, make_params, subimage_mask
from .encoder import _offset_arrays
from .errors import ContainerError, TableMismatchWarning, TruncatedStreamError


def decode_plane_levels(streams, width, height, params, table, upto=None):
    nn = params.n_sub
    upto = nn if upto is None else upto
    if not 1 <= upto <= nn:
        raise ValueError(f"subimage count must be in 1..{nn}")
    if len(streams) < upto:
        raise ContainerError(f"only {len(streams)} streams available, {upto} requested")
    levels = np.zeros((height, width), dtype=np.int64)
    shifts = np.asarray(params.shifts, dtype=np.int64)
    tab = table.as_array().astype(np.int64)
    dr, dc, n = _offset_arrays(params.N)
    for t in range(upto):
        data = np.frombuffer(bytes(streams[t]), dtype=np.uint8)
        status = K.decode_stream(data, levels, t, params.M, params.N, params.delta,
                                 shifts, tab, dr, dc, n)
        if status == K.TRUNCATED:
            raise TruncatedStreamError(f"subimage {t + 1} stream is truncated")
        if status != K.OK:
            raise TruncatedStreamError(f"subimage {t + 1} stream is malformed")
    mask = None if upto == nn else subimage_mask(height, width, params.N, upto)
    return QuantizedImage(levels.astype(np.uint8), params, mask)


def decode_levels(container, table=None, upto=None):
    """One QuantizedImage per plane, holding subimages 1..upto."""
    params = make_params(container.M, container.N)
    table = table or default_table(params.M)
    if table.M != params.M:
        raise ValueError(f"table is for M={table.M}, container uses M={params.M}")
    if table.checksum != container.table_crc:
        warnings.warn("predictor table checksum differs from the one used to encode",
                      TableMismatchWarning, stacklevel=2)
    return [decode_plane_levels(s, container.width, container.height, params, table, upto)
            for s in container.planes]
