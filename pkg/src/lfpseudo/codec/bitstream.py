"""Container format.

Little-endian layout::

    magic     4 bytes  b"LFPS"
    version   u8
    hdr_len   u32
    header    hdr_len bytes of UTF-8 JSON (sorted keys)
    n_frames  u32
    n_frames x (u32 length, payload bytes)   in coding order

Each payload is an Exp-Golomb bit string closed by a single stop bit and zero
padding to a byte boundary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from .entropy import DecodeError

MAGIC = b"LFPS"
VERSION = 1


@dataclass
class Bitstream:
    header: dict
    payloads: list = field(default_factory=list)

    def to_bytes(self) -> bytes:
        hdr = json.dumps(self.header, sort_keys=True, separators=(",", ":")).encode()
        parts = [MAGIC, struct.pack("<BI", VERSION, len(hdr)), hdr, struct.pack("<I", len(self.payloads))]
        for p in self.payloads:
            parts.append(struct.pack("<I", len(p)))
            parts.append(p)
        return b"".join(parts)

    def size_bits(self) -> int:
        return 8 * len(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        if data[:4] != MAGIC:
            raise DecodeError("not an lfpseudo bitstream (bad magic) at byte 0")
        pos = 4

        def take(n):
            nonlocal pos
            if pos + n > len(data):
                raise DecodeError(f"truncated stream at byte {pos}")
            out = data[pos : pos + n]
            pos += n
            return out

        version, hlen = struct.unpack("<BI", take(5))
        if version != VERSION:
            raise DecodeError(f"unsupported version {version} at byte 4")
        try:
            header = json.loads(take(hlen).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise DecodeError(f"malformed header JSON at byte 9: {e}") from None
        (n,) = struct.unpack("<I", take(4))
        payloads = []
        for _ in range(n):
            (ln,) = struct.unpack("<I", take(4))
            payloads.append(take(ln))
        if pos != len(data):
            raise DecodeError(f"trailing bytes after last payload at byte {pos}")
        return cls(header, payloads)
