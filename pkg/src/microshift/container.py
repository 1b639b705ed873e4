"""Byte layout of compressed files.

Header (little-endian): magic "MSH1", version, M, N, plane count, width,
height, CRC-32 of the predictor table entries, three reserved bytes.  Then,
per plane and per subimage j = 1..N^2, a u32 byte length and the payload.
"""

import struct
from dataclasses import dataclass, field

from .errors import ContainerError

MAGIC = b"MSH1"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBHHI3x")
_LEN = struct.Struct("<I")


@dataclass
class CompressedContainer:
    M: int
    N: int
    width: int
    height: int
    table_crc: int
    planes: list = field(default_factory=list)  # per plane, N^2 byte strings

    @property
    def payload_bytes(self):
        return sum(len(s) for plane in self.planes for s in plane)

    def to_bytes(self):
        parts = [_HEADER.pack(MAGIC, VERSION, self.M, self.N, len(self.planes),
                              self.width, self.height, self.table_crc)]
        for plane in self.planes:
            for s in plane:
                parts.append(_LEN.pack(len(s)))
                parts.append(bytes(s))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data, upto=None):
        """Parse a container.  With ``upto`` only the first ``upto`` streams of
        each plane need to be present, so a truncated file still yields a
        progressive prefix for a single-plane image."""
        data = bytes(data)
        if len(data) < _HEADER.size:
            raise ContainerError("file shorter than the header")
        magic, version, M, N, nplanes, width, height, crc = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ContainerError(f"unsupported version {version}")
        if M not in (2, 3, 4) or N not in (3, 4) or nplanes not in (1, 3):
            raise ContainerError("invalid codec parameters in header")
        pos = _HEADER.size
        need = N * N if upto is None else upto
        planes = []
        for _ in range(nplanes):
            streams = []
            for j in range(N * N):
                if pos + _LEN.size > len(data):
                    if j >= need:
                        break
                    raise ContainerError("container ends inside a length field")
                (n,) = _LEN.unpack_from(data, pos)
                pos += _LEN.size
                if pos + n > len(data):
                    if j >= need:
                        break
                    raise ContainerError("container ends inside a stream")
                streams.append(data[pos:pos + n])
                pos += n
            planes.append(streams)
        return cls(M, N, width, height, crc, planes)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path, upto=None):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read(), upto)
