"""Binary PGM (P5) / PPM (P6) reading and writing, 8-bit only.

Images are held as a list of 2-D ``uint8`` planes, one for gray input and
three (R, G, B) for color input.  The codec runs on each plane separately.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BadHeaderError, TruncatedImageError, UnsupportedMaxvalError

_MAGIC = {b"P5": 1, b"P6": 3}


@dataclass
class MultiPlaneImage:
    planes: list = field(default_factory=list)
    kind: str = "gray"

    def __post_init__(self):
        self.planes = [np.ascontiguousarray(p, dtype=np.uint8) for p in self.planes]
        if len(self.planes) not in (1, 3):
            raise ValueError("an image has 1 or 3 planes")
        shapes = {p.shape for p in self.planes}
        if len(shapes) != 1 or self.planes[0].ndim != 2:
            raise ValueError("planes must be 2-D and share one shape")
        if self.kind not in ("gray", "rgb") or (self.kind == "rgb") != (len(self.planes) == 3):
            raise ValueError(f"kind {self.kind!r} does not match {len(self.planes)} planes")

    @property
    def height(self):
        return self.planes[0].shape[0]

    @property
    def width(self):
        return self.planes[0].shape[1]

    @classmethod
    def gray(cls, plane):
        return cls([plane], "gray")

    @classmethod
    def rgb(cls, array):
        """Build from an (H, W, 3) array."""
        array = np.asarray(array)
        return cls([array[..., i] for i in range(3)], "rgb")

    def to_array(self):
        """(H, W) for gray, (H, W, 3) for rgb."""
        if self.kind == "gray":
            return self.planes[0]
        return np.stack(self.planes, axis=-1)


def _tokens(data, count):
    """Pull ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset of the raster, which starts after the
    single whitespace byte following the last token.
    """
    out = []
    pos = 0
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise BadHeaderError("header ends early")
        out.append(data[start:pos])
    if pos >= n or not data[pos:pos + 1].isspace():
        raise BadHeaderError("missing whitespace after header")
    return out, pos + 1


def parse_image(data):
    """Decode PGM/PPM bytes into a MultiPlaneImage."""
    data = bytes(data)
    magic = data[:2]
    if magic not in _MAGIC:
        raise BadHeaderError(f"unknown magic {magic!r}")
    toks, offset = _tokens(data[2:], 3)
    offset += 2
    try:
        width, height, maxval = (int(t) for t in toks)
    except ValueError:
        raise BadHeaderError(f"non-numeric header field in {toks!r}") from None
    if width <= 0 or height <= 0 or width > 65535 or height > 65535:
        raise BadHeaderError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}")
    nplanes = _MAGIC[magic]
    need = width * height * nplanes
    raster = data[offset:offset + need]
    if len(raster) < need:
        raise TruncatedImageError(f"expected {need} raster bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, nplanes)
    if nplanes == 1:
        return MultiPlaneImage([arr[..., 0].copy()], "gray")
    return MultiPlaneImage([arr[..., i].copy() for i in range(3)], "rgb")


def read_image(path):
    with open(path, "rb") as f:
        return parse_image(f.read())


def format_image(img):
    magic = b"P5" if img.kind == "gray" else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + np.ascontiguousarray(img.to_array()).tobytes()


def write_image(img, path):
    if isinstance(img, np.ndarray):
        img = MultiPlaneImage.gray(img) if img.ndim == 2 else MultiPlaneImage.rgb(img)
    with open(path, "wb") as f:
        f.write(format_image(img))
