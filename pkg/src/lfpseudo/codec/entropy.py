"""Exp-Golomb bit I/O and run-length coefficient coding."""

from __future__ import annotations

import numpy as np


class DecodeError(ValueError):
    """Malformed or truncated bitstream."""


class BitWriter:
    def __init__(self):
        self._acc = 0
        self._n = 0
        self._out = bytearray()

    def write(self, value: int, nbits: int):
        if nbits == 0:
            return
        self._acc = (self._acc << nbits) | (value & ((1 << nbits) - 1))
        self._n += nbits
        while self._n >= 8:
            self._n -= 8
            self._out.append((self._acc >> self._n) & 0xFF)
        self._acc &= (1 << self._n) - 1

    def ue(self, v: int):
        if v < 0:
            raise ValueError(f"ue() needs a non-negative value, got {v}")
        v += 1
        n = v.bit_length()
        self.write(0, n - 1)
        self.write(v, n)

    def se(self, v: int):
        self.ue(2 * v - 1 if v > 0 else -2 * v)

    @property
    def bits(self) -> int:
        return 8 * len(self._out) + self._n

    def getvalue(self) -> bytes:
        """Bytes written so far, last byte padded with a stop bit and zeros."""
        out = bytearray(self._out)
        acc = (self._acc << 1) | 1
        n = self._n + 1
        pad = (-n) % 8
        acc <<= pad
        n += pad
        for k in range(n // 8 - 1, -1, -1):
            out.append((acc >> (8 * k)) & 0xFF)
        return bytes(out)


class BitCounter:
    """Drop-in for :class:`BitWriter` that only counts bits."""

    def __init__(self):
        self.bits = 0

    def write(self, value: int, nbits: int):
        self.bits += nbits

    def ue(self, v: int):
        self.bits += 2 * (v + 1).bit_length() - 1

    def se(self, v: int):
        self.ue(2 * v - 1 if v > 0 else -2 * v)


def ue_bits(v: int) -> int:
    return 2 * (v + 1).bit_length() - 1


def se_bits(v: int) -> int:
    return ue_bits(2 * v - 1 if v > 0 else -2 * v)


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit position
        # payload ends at the last set bit (the stop bit)
        end = len(data) * 8
        k = len(data) - 1
        while k >= 0 and data[k] == 0:
            k -= 1
        if k < 0:
            raise DecodeError(f"payload has no stop bit ({len(data)} bytes)")
        b = data[k]
        tz = (b & -b).bit_length() - 1
        self._end = k * 8 + (7 - tz)
        self._limit = min(self._end, end)

    @property
    def byte_offset(self) -> int:
        return self._pos // 8

    def _bit(self) -> int:
        if self._pos >= self._limit:
            raise DecodeError(f"unexpected end of payload at byte {self._pos // 8}")
        b = (self._data[self._pos >> 3] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return b

    def read(self, nbits: int) -> int:
        v = 0
        for _ in range(nbits):
            v = (v << 1) | self._bit()
        return v

    def ue(self) -> int:
        zeros = 0
        while self._bit() == 0:
            zeros += 1
            if zeros > 32:
                raise DecodeError(f"Exp-Golomb prefix too long at byte {self._pos // 8}")
        return ((1 << zeros) | self.read(zeros)) - 1

    def se(self) -> int:
        k = self.ue()
        return (k + 1) // 2 if k & 1 else -(k // 2)

    def at_end(self) -> bool:
        return self._pos >= self._limit


def ue_string(v: int) -> str:
    w = BitWriter()
    w.ue(v)
    return format(int.from_bytes(w.getvalue(), "big"), f"0{8 * len(w.getvalue())}b")[: w.bits]


_ZIGZAG: dict[int, np.ndarray] = {}


def zigzag(n: int) -> np.ndarray:
    """Flat indices of an ``n x n`` block in zig-zag order."""
    if n not in _ZIGZAG:
        idx = sorted(
            ((r, c) for r in range(n) for c in range(n)),
            key=lambda rc: (rc[0] + rc[1], rc[0] if (rc[0] + rc[1]) % 2 else rc[1]),
        )
        _ZIGZAG[n] = np.array([r * n + c for r, c in idx], dtype=np.int64)
    return _ZIGZAG[n]


def encode_coeffs(w, levels: np.ndarray):
    """Count of non-zeros, then (zero run, |level| - 1, sign) per non-zero in zig-zag order."""
    flat = levels.reshape(-1)[zigzag(levels.shape[0])]
    nz = np.flatnonzero(flat)
    w.ue(len(nz))
    prev = -1
    for k in nz:
        v = int(flat[k])
        w.ue(int(k) - prev - 1)
        w.ue(abs(v) - 1)
        w.write(1 if v < 0 else 0, 1)
        prev = int(k)


def coeff_bits(levels: np.ndarray) -> int:
    flat = levels.reshape(-1)[zigzag(levels.shape[0])]
    nz = np.flatnonzero(flat)
    bits = ue_bits(len(nz))
    if len(nz):
        runs = np.diff(nz, prepend=-1) - 1
        mags = np.abs(flat[nz]) - 1
        bits += int(np.sum(2 * _bitlen(runs + 1) - 1) + np.sum(2 * _bitlen(mags + 1) - 1)) + len(nz)
    return bits


def _bitlen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape, dtype=np.int64)
    v = a.copy()
    while np.any(v):
        nzm = v > 0
        out += nzm
        v >>= 1
    return out


def decode_coeffs(r: BitReader, n: int) -> np.ndarray:
    total = n * n
    count = r.ue()
    if count > total:
        raise DecodeError(f"{count} coefficients in a {n}x{n} block at byte {r.byte_offset}")
    flat = np.zeros(total, dtype=np.int64)
    pos = -1
    for _ in range(count):
        pos += r.ue() + 1
        if pos >= total:
            raise DecodeError(f"coefficient run overflows block at byte {r.byte_offset}")
        mag = r.ue() + 1
        flat[pos] = -mag if r.read(1) else mag
    out = np.zeros(total, dtype=np.int64)
    out[zigzag(n)] = flat
    return out.reshape(n, n)
