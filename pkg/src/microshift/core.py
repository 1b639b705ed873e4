"""Microshift sub-quantization: shift table, modulo quantizer, subimage
geometry and circular uncertainty intervals.

Every pixel at pattern position t = (row mod N)*N + (col mod N) gets the
offset shifts[t] added before a uniform M-bit quantizer.  The sum is wrapped
mod 256 instead of clipped, so bright pixels land in low levels and are
recovered later from their neighbours.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CodecParams:
    M: int
    N: int
    delta: int
    shifts: tuple

    @property
    def levels(self):
        return 1 << self.M

    @property
    def n_sub(self):
        return self.N * self.N

    def shift_map(self, height, width):
        """Per-pixel shift array of shape (height, width)."""
        t = (np.arange(height)[:, None] % self.N) * self.N + np.arange(width)[None, :] % self.N
        return np.asarray(self.shifts, dtype=np.int32)[t]

    def subimage_map(self, height, width):
        """Per-pixel subimage index j in 1..N^2."""
        return (np.arange(height)[:, None] % self.N) * self.N + np.arange(width)[None, :] % self.N + 1


def make_params(M=3, N=3):
    """Quantizer resolution M in {2,3,4}, block side N in {3,4}."""
    if M not in (2, 3, 4):
        raise ValueError(f"M must be 2, 3 or 4, got {M}")
    if N not in (3, 4):
        raise ValueError(f"N must be 3 or 4, got {N}")
    delta = 256 >> M
    nn = N * N
    # round-half-up of t*delta/N^2 in integer arithmetic
    shifts = tuple((2 * t * delta + nn) // (2 * nn) for t in range(nn))
    return CodecParams(M, N, delta, shifts)


def quantize_level(v, params):
    return int(v) // params.delta


@dataclass
class QuantizedImage:
    """M-bit level image plus an optional presence mask.

    ``mask`` is None when every position is known; otherwise it is a boolean
    array marking the positions whose levels were received.
    """

    levels: np.ndarray
    params: CodecParams
    mask: np.ndarray = field(default=None)

    @property
    def height(self):
        return self.levels.shape[0]

    @property
    def width(self):
        return self.levels.shape[1]

    def present(self):
        if self.mask is None:
            return np.ones(self.levels.shape, dtype=bool)
        return self.mask

    def reconstruct(self):
        """Level values L_k = k*delta (no shift compensation)."""
        return self.levels.astype(np.int32) * self.params.delta


def microshift_quantize(plane, params):
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError("expected a 2-D plane")
    shifted = (plane.astype(np.int32) + params.shift_map(*plane.shape)) & 255
    return QuantizedImage((shifted // params.delta).astype(np.uint8), params)


def subimage_mask(height, width, N, K):
    """Positions belonging to subimages 1..K."""
    j = (np.arange(height)[:, None] % N) * N + np.arange(width)[None, :] % N + 1
    return j <= K


def subimage_of(row, col, N):
    return (row % N) * N + (col % N) + 1


@dataclass(frozen=True)
class UncertaintyInterval:
    """Integer set {lo, ..., lo + width - 1} taken mod 256."""

    lo: int
    width: int

    def __post_init__(self):
        if not 0 < self.width <= 256:
            raise ValueError("width must be in (0, 256]")
        object.__setattr__(self, "lo", self.lo % 256)

    def __contains__(self, v):
        return (v - self.lo) % 256 < self.width

    def values(self):
        return [(self.lo + i) % 256 for i in range(self.width)]

    def midpoint(self):
        # lower median for even widths
        return (self.lo + (self.width - 1) // 2) % 256

    def intersect(self, other):
        """Circular intersection, or None when empty.

        Both widths are at most 64 here, so the result is a single arc.
        """
        if self.width + other.width > 256:
            raise ValueError("intersection of wide arcs may be disconnected")
        d = (other.lo - self.lo) % 256
        if d < self.width:
            return UncertaintyInterval(other.lo, min(other.width, self.width - d))
        if d + other.width > 256:
            return UncertaintyInterval(self.lo, min(self.width, d + other.width - 256))
        return None


def uncertainty_of(level, shift, params):
    return UncertaintyInterval(level * params.delta - shift, params.delta)


def heuristic_estimate(observations, params):
    """Greedy intersection of the uncertainty intervals of ``observations``.

    ``observations`` is a sequence of (level, shift) pairs, nearest first; the
    first entry is the pixel itself (or, for prediction, the closest coded
    neighbour).  An interval that would empty the running intersection is
    skipped.  Returns (estimate, interval).
    """
    observations = list(observations)
    if not observations:
        raise ValueError("no observations")
    cur = uncertainty_of(*observations[0], params)
    for level, shift in observations[1:]:
        nxt = cur.intersect(uncertainty_of(level, shift, params))
        if nxt is not None:
            cur = nxt
    return cur.midpoint(), cur
