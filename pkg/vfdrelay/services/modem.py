"""QPSK mapping, soft demapping and the complex <-> real-vector decomposition.

Gray labelling anchored at (0, 0) -> (1 + 1j) / sqrt(2): the first bit of a pair
rides on the real axis, the second on the imaginary axis. LLR > 0 means bit 0.
"""

from __future__ import annotations

import numpy as np


SQRT_HALF = 1.0 / np.sqrt(2.0)
BITS_PER_SYMBOL = 2
# per real dimension, unit-energy QPSK
SIGMA2_X = 0.5
LLR_CLIP = 50.0

CONSTELLATION = np.array(
    [(1 - 2 * b0 + 1j * (1 - 2 * b1)) * SQRT_HALF for b0 in (0, 1) for b1 in (0, 1)],
    dtype=np.complex128,
)
# row q holds the label (b0, b1) of CONSTELLATION[q]
LABELS = np.array([(b0, b1) for b0 in (0, 1) for b1 in (0, 1)], dtype=np.int8)


class ModemError(ValueError):
    pass


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8).reshape(-1)
    if bits.size % BITS_PER_SYMBOL:
        raise ModemError(f"QPSK needs an even number of bits, got {bits.size}")
    pairs = bits.reshape(-1, BITS_PER_SYMBOL).astype(np.float64)
    return ((1.0 - 2.0 * pairs[:, 0]) + 1j * (1.0 - 2.0 * pairs[:, 1])) * SQRT_HALF


def qpsk_soft_demod(y: np.ndarray, h_eff: complex | np.ndarray, noise_var: float | np.ndarray) -> np.ndarray:
    """Exact bit LLRs for y = h_eff * x + n, n ~ CN(0, noise_var).

    `noise_var` is the complex variance E|n|^2; interference is folded into it.
    """
    noise = np.asarray(noise_var, dtype=np.float64)
    if np.any(noise <= 0):
        raise ModemError(f"noise_var must be positive, got {noise_var}")
    y = np.asarray(y, dtype=np.complex128).reshape(-1)
    matched = np.conj(h_eff) * y
    scale = 2.0 * np.sqrt(2.0) / noise
    llrs = np.empty(y.size * BITS_PER_SYMBOL, dtype=np.float64)
    llrs[0::2] = scale * matched.real
    llrs[1::2] = scale * matched.imag
    return np.clip(llrs, -LLR_CLIP, LLR_CLIP)


def to_real(z: complex | np.ndarray) -> np.ndarray:
    """[Re, Im] along a trailing axis of length 2."""
    z = np.asarray(z, dtype=np.complex128)
    return np.stack([z.real, z.imag], axis=-1)


def to_complex(pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.float64)
    return pairs[..., 0] + 1j * pairs[..., 1]


def to_real_matrix(h: complex | np.ndarray, tx_power: float = 1.0) -> np.ndarray:
    """sqrt(P) * [[Re h, -Im h], [Im h, Re h]]; a stack of matrices for array input."""
    h = np.asarray(h, dtype=np.complex128)
    scale = np.sqrt(tx_power)
    matrix = np.empty(h.shape + (2, 2), dtype=np.float64)
    matrix[..., 0, 0] = h.real
    matrix[..., 0, 1] = -h.imag
    matrix[..., 1, 0] = h.imag
    matrix[..., 1, 1] = h.real
    return scale * matrix
