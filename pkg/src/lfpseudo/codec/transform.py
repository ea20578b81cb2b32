"""Integer DCT-II approximation with a dead-zone scalar quantizer.

The basis is ``round(64 * sqrt(N) * C)`` for the orthonormal DCT-II matrix
``C``, so the forward transform has gain ``4096 * N`` and the quantizer folds
that gain into its shift. Quantizer step in orthonormal units is
``2 ** ((qp - 4) / 6)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_QSCALE = (26214, 23302, 20560, 18396, 16384, 14564)
_DQSCALE = (40, 45, 51, 57, 64, 72)

DEADZONE_INTRA = 1 / 3
DEADZONE_INTER = 1 / 6


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    if n < 2 or n & (n - 1):
        raise ValueError(f"transform size must be a power of two >= 2, got {n}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    c[0, :] = np.sqrt(1.0 / n)
    t = np.round(64 * math.sqrt(n) * c).astype(np.int64)
    t.setflags(write=False)
    return t


def _gain_shift(n: int) -> int:
    return 12 + n.bit_length() - 1


def step_size(qp: int) -> float:
    return 2.0 ** ((qp - 4) / 6)


def forward(residual: np.ndarray) -> np.ndarray:
    t = dct_matrix(residual.shape[0])
    x = residual.astype(np.int64)
    return t @ x @ t.T


def quantize(coeffs: np.ndarray, qp: int, deadzone: float = DEADZONE_INTER) -> np.ndarray:
    n = coeffs.shape[0]
    shift = 14 + qp // 6 + _gain_shift(n)
    offset = int(deadzone * (1 << shift))
    mag = (np.abs(coeffs) * _QSCALE[qp % 6] + offset) >> shift
    return np.where(coeffs < 0, -mag, mag)


def dequantize(levels: np.ndarray, qp: int) -> np.ndarray:
    return (levels.astype(np.int64) * _DQSCALE[qp % 6]) << (qp // 6)


def inverse(dequantized: np.ndarray) -> np.ndarray:
    n = dequantized.shape[0]
    t = dct_matrix(n)
    shift = 6 + _gain_shift(n)
    y = t.T @ dequantized.astype(np.int64) @ t
    return (y + (1 << (shift - 1))) >> shift


def transform_quantize(residual: np.ndarray, qp: int, deadzone: float = DEADZONE_INTER) -> np.ndarray:
    if not 0 <= qp <= 51:
        raise ValueError(f"qp must be in 0..51, got {qp}")
    return quantize(forward(residual), qp, deadzone)


def dequantize_inverse(levels: np.ndarray, qp: int) -> np.ndarray:
    if not levels.any():
        return np.zeros(levels.shape, dtype=np.int64)
    return inverse(dequantize(levels, qp))
