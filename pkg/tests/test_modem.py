from __future__ import annotations

import numpy as np
import pytest
from scipy.special import logsumexp

from vfdrelay.services.modem import (
    CONSTELLATION,
    LABELS,
    ModemError,
    qpsk_map,
    qpsk_soft_demod,
    to_complex,
    to_real,
    to_real_matrix,
)


def test_gray_mapping_follows_label_table():
    symbols = qpsk_map(LABELS.reshape(-1))

    assert np.allclose(symbols, CONSTELLATION)
    assert np.allclose(np.abs(symbols), 1.0)
    assert np.isclose(qpsk_map([0, 0])[0], (1 + 1j) / np.sqrt(2))


def test_odd_bit_count_is_rejected():
    with pytest.raises(ModemError):
        qpsk_map([0, 1, 1])


def test_soft_demod_matches_exhaustive_log_likelihoods():
    rng = np.random.default_rng(11)
    h = 0.8 - 0.6j
    noise_var = 0.7
    x = qpsk_map(rng.integers(0, 2, 40))
    y = h * x + np.sqrt(noise_var / 2) * (rng.standard_normal(20) + 1j * rng.standard_normal(20))

    metrics = -np.abs(y[:, None] - h * CONSTELLATION[None, :]) ** 2 / noise_var
    expected = np.empty(40)
    for bit in range(2):
        zero = LABELS[:, bit] == 0
        expected[bit::2] = logsumexp(metrics[:, zero], axis=1) - logsumexp(metrics[:, ~zero], axis=1)

    assert np.allclose(qpsk_soft_demod(y, h, noise_var), expected, atol=1e-9)


def test_soft_demod_signs_follow_bits_and_clip():
    bits = np.array([0, 1, 1, 0])
    llrs = qpsk_soft_demod(qpsk_map(bits) * 1000, 1.0, 1.0)

    assert np.array_equal(llrs, np.array([50.0, -50.0, -50.0, 50.0]))


def test_soft_demod_rejects_non_positive_variance():
    with pytest.raises(ModemError):
        qpsk_soft_demod(np.ones(2), 1.0, 0.0)


def test_real_matrix_acts_like_complex_product():
    h = 0.3 + 1.7j
    x = CONSTELLATION[2]

    assert np.allclose(to_real_matrix(h, 4.0) @ to_real(x), to_real(2.0 * h * x))


def test_real_pairs_round_trip():
    z = np.array([0.2 - 1.5j, -3.0 + 0.0j, 1e-9 + 4j])

    assert to_real(z).shape == (3, 2)
    assert np.array_equal(to_complex(to_real(z)), z)


def test_real_model_with_noise_matches_complex_model():
    rng = np.random.default_rng(21)
    h = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    x = qpsk_map(rng.integers(0, 2, 32))
    z = rng.standard_normal(16) + 1j * rng.standard_normal(16)

    y_real = np.einsum("...ij,...j->...i", to_real_matrix(h, 2.5), to_real(x)) + to_real(z)

    assert np.allclose(to_complex(y_real), np.sqrt(2.5) * h * x + z)
