"""FAST decoding: heuristic interval intersection followed by an iterated
edge-preserving weighted least squares smoother, plus the progressive
variant that fills missing subimages by interpolation."""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K


@dataclass(frozen=True)
class WlsParams:
    iterations: int = 8
    lam: float = 1.0
    sigma_c: float = 20.0

    def __post_init__(self):
        if self.iterations < 1 or self.lam < 0 or self.sigma_c <= 0:
            raise ValueError("need iterations >= 1, lam >= 0, sigma_c > 0")


def _shift_array(params):
    return np.asarray(params.shifts, dtype=np.int64)


def heuristic_decode(q):
    """Per-pixel estimate for every present position; absent ones are 0."""
    present = q.present()
    if not present.any():
        raise ValueError("no levels present")
    return K.heuristic_plane(q.levels.astype(np.int64), present, q.params.N,
                             q.params.delta, _shift_array(q.params))


def wls_smooth(img, guide, p=WlsParams(), clamp=True):
    """Iterated separable WLS smoothing of ``img`` steered by ``guide``.

    Returns uint8 (rounded, clamped) unless ``clamp`` is False, in which case
    the raw float result is returned.
    """
    img = np.asarray(img)
    guide = np.asarray(guide, dtype=np.float64)
    if img.shape != guide.shape:
        raise ValueError(f"shape mismatch {img.shape} vs {guide.shape}")
    u = img.astype(np.float64).copy()
    T = p.iterations
    if p.lam > 0 and min(u.shape) > 0:
        for t in range(1, T + 1):
            lam_t = 1.5 * p.lam * 4.0 ** (T - t) / (4.0 ** T - 1)
            if u.shape[1] > 1:
                K.wls_pass(u, guide, lam_t, p.sigma_c, 1)
            if u.shape[0] > 1:
                K.wls_pass(u, guide, lam_t, p.sigma_c, 0)
    if not clamp:
        return u
    return np.clip(np.rint(u), 0, 255).astype(np.uint8)


def _line_fill(values, present):
    """Linear interpolation along each row.  Returns the interpolant and the
    length of the bracketing gap (inf where no sample lies on both sides)."""
    H, W = values.shape
    est = np.zeros((H, W))
    gap = np.full((H, W), np.inf)
    cols = np.arange(W)
    for r in np.flatnonzero(present.any(axis=1)):
        idx = np.flatnonzero(present[r])
        est[r] = np.interp(cols, idx, values[r, idx])
        j = np.searchsorted(idx, cols)
        inside = (j > 0) & (j < len(idx))
        span = idx[np.minimum(j, len(idx) - 1)] - idx[np.maximum(j - 1, 0)]
        gap[r] = np.where(inside, span, np.inf)
    return est, gap


def _row_then_column_fill(out, present):
    """Fill along rows that hold samples, then down the columns for rows that
    hold none; beyond the outermost samples the nearest value is repeated."""
    H, W = out.shape
    cols = np.arange(W)
    has = present.any(axis=1)
    for r in np.flatnonzero(has):
        m = present[r]
        if not m.all():
            out[r] = np.interp(cols, cols[m], out[r, m])
    if not has.all():
        rows = np.flatnonzero(has)
        missing = np.flatnonzero(~has)
        lo = np.clip(np.searchsorted(rows, missing) - 1, 0, len(rows) - 1)
        hi = np.clip(lo + 1, 0, len(rows) - 1)
        r0, r1 = rows[lo], rows[hi]
        span = np.where(r1 != r0, r1 - r0, 1)
        wgt = np.where(r1 != r0, (missing - r0) / span, 0.0)[:, None]
        out[missing] = (1 - wgt) * out[r0] + wgt * out[r1]
    return out


def fill_missing(values, present):
    """Interpolate absent pixels from the present ones.

    Each absent pixel blends the linear interpolants along its row and its
    column, weighted by the inverse length of the gap each one bridges, so
    the shorter span dominates.  Pixels not bracketed in either direction
    fall back to a row-then-column linear fill.  On the regular grid left by
    a single subimage this is bilinear interpolation.
    """
    out = np.asarray(values, dtype=np.float64).copy()
    if present.all():
        return out
    eh, gh = _line_fill(out, present)
    ev, gv = _line_fill(out.T, present.T)
    wh = 1.0 / gh
    wv = 1.0 / gv.T
    tot = wh + wv
    blend = (wh * eh + wv * ev.T) / np.where(tot > 0, tot, 1.0)
    absent = ~present
    fallback = _row_then_column_fill(out.copy(), present)
    out[absent] = np.where(tot[absent] > 0, blend[absent], fallback[absent])
    return out


def progressive_init(q):
    """Heuristic estimates with absent pixels interpolated (float)."""
    est = heuristic_decode(q)
    return fill_missing(est, q.present())


def fast_decode(q, p=WlsParams()):
    """Heuristic decode smoothed with itself as the guide."""
    if q.mask is not None and not q.mask.all():
        raise ValueError("fast_decode needs every subimage; use progressive_fast")
    h = heuristic_decode(q)
    return wls_smooth(h, h, p)


def progressive_fast(q, p=WlsParams()):
    """FAST output from whatever subimages ``q`` holds."""
    init = progressive_init(q)
    return wls_smooth(init, init, p)
