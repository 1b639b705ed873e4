"""End-to-end helpers: container in, image out."""

from .decoder import decode_levels
from .fast import WlsParams, heuristic_decode, progressive_fast, progressive_init
from .mrf import MrfParams, mrf_decode
from .pixelio import MultiPlaneImage

import numpy as np

METHODS = ("heuristic", "fast", "mrf")


def reconstruct(q, method="fast", wls=None, mrf=None, received=None):
    """8-bit plane from a (possibly partial) level image."""
    if method == "heuristic":
        if q.mask is None or q.mask.all():
            return heuristic_decode(q)
        return np.clip(np.rint(progressive_init(q)), 0, 255).astype(np.uint8)
    if method == "fast":
        return progressive_fast(q, wls or WlsParams())
    if method == "mrf":
        return mrf_decode(q, mrf or MrfParams(), received)
    raise ValueError(f"unknown method {method!r}")


def decode_image(container, method="fast", upto=None, table=None, wls=None, mrf=None):
    qs = decode_levels(container, table, upto)
    planes = [reconstruct(q, method, wls, mrf, upto) for q in qs]
    return MultiPlaneImage(planes, "gray" if len(planes) == 1 else "rgb")
