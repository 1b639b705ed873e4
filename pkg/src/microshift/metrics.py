"""Quality and rate measures."""

import numpy as np
from scipy.ndimage import gaussian_filter

from . import _kernels as K
from .context import subimage
from .core import microshift_quantize

PSNR_CAP = 99.0


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b):
    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10 * np.log10(255.0 ** 2 / mse)))


def ssim_map(a, b):
    """Local SSIM with an 11x11 Gaussian window (sigma 1.5), symmetric
    boundary extension."""
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ValueError("ssim works on single planes")
    if min(a.shape) < 11:
        raise ValueError("image too small for an 11x11 window")
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2

    def blur(x):
        # radius int(3.5 * 1.5 + 0.5) = 5 gives the 11-tap window
        return gaussian_filter(x, 1.5, mode="reflect", truncate=3.5)

    mu_a, mu_b = blur(a), blur(b)
    va = blur(a * a) - mu_a ** 2
    vb = blur(b * b) - mu_b ** 2
    cov = blur(a * b) - mu_a * mu_b
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (va + vb + c2))


def ssim(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 3:
        return float(np.mean([ssim(a[..., i], b[..., i]) for i in range(a.shape[-1])]))
    return float(np.mean(ssim_map(a, b)))


def bpp(container):
    pixels = container.width * container.height * max(1, len(container.planes))
    return 8.0 * container.payload_bytes / pixels


def shannon_entropy(symbols):
    symbols = np.asarray(symbols).ravel()
    if symbols.size == 0:
        return 0.0
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    return float(-(p * np.log2(p)).sum() + 0.0)


def residue_entropy(plane, params, table=None, predictor="intra"):
    """Entropy of mapped subimage-1 residues, in bits per image pixel."""
    if predictor not in ("intra", "med"):
        raise ValueError("predictor is 'intra' or 'med'")
    if predictor == "intra" and table is None:
        raise ValueError("intra prediction needs a table")
    plane = np.asarray(plane)
    sub = np.ascontiguousarray(subimage(microshift_quantize(plane, params).levels, 1, params.N),
                               dtype=np.int64)
    tab = np.zeros(313, np.int64) if table is None else table.as_array().astype(np.int64)
    codes = K.intra_codes(sub, tab, params.M, predictor == "med")
    return shannon_entropy(codes) * codes.size / plane.size
