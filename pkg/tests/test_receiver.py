from __future__ import annotations

import numpy as np
import pytest
from scipy.special import logsumexp

from vfdrelay.services.codec import CodecSpec, encode
from vfdrelay.services.modem import CONSTELLATION, LABELS, qpsk_map, qpsk_soft_demod
from vfdrelay.services.receiver import (
    AugmentedHypothesisSet,
    FramePosterior,
    ReceiverError,
    decode_destination_frame,
    joint_map_detect,
    split_and_combine,
)


G_SD = 1.1 + 0.4j
G_RD = -0.5 + 0.9j


def _noisy(y: np.ndarray, noise_var: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return y + np.sqrt(noise_var / 2) * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))


def _posterior(slot: int, source: np.ndarray | None, relay: np.ndarray) -> FramePosterior:
    return FramePosterior(
        slot=slot,
        log_posterior=np.zeros((relay.size // 2, 1, 1)),
        source_llrs=source,
        relay_llrs=relay,
        puncture_posterior=np.zeros(relay.size // 2),
    )


def test_relay_alphabet_priors():
    symbols, log_priors, rows = AugmentedHypothesisSet(p_zero=0.2).relay_alphabet()

    assert symbols.size == 5
    assert np.exp(log_priors).sum() == pytest.approx(1.0)
    assert rows.tolist() == [0, 1, 2, 3, -1]
    assert AugmentedHypothesisSet(p_zero=1.0).relay_alphabet()[0].tolist() == [0j]
    assert AugmentedHypothesisSet(p_zero=0.0).relay_alphabet()[0].size == 4
    with pytest.raises(ReceiverError):
        AugmentedHypothesisSet(p_zero=1.5)


def test_boundary_slots():
    first = AugmentedHypothesisSet.for_slot(1, 4, 0.3)
    last = AugmentedHypothesisSet.for_slot(5, 4, 0.3)

    assert first.p_zero == 1.0 and first.source_present
    assert last.p_zero == 0.3 and not last.source_present
    with pytest.raises(ReceiverError):
        AugmentedHypothesisSet.for_slot(6, 4, 0.3)


def test_first_slot_reduces_to_single_user_demod():
    x = qpsk_map(np.random.default_rng(1).integers(0, 2, 64))
    y = _noisy(G_SD * x, 0.6, seed=2)

    posterior = joint_map_detect(y, G_SD, G_RD, 0.6, AugmentedHypothesisSet.for_slot(1, 20, 0.4), slot=1)

    assert np.allclose(posterior.source_llrs, qpsk_soft_demod(y, G_SD, 0.6), atol=1e-9)
    assert not posterior.relay_llrs.any()
    assert not posterior.puncture_flags.any()


def test_zero_puncture_prior_is_plain_joint_map():
    rng = np.random.default_rng(5)
    s = qpsk_map(rng.integers(0, 2, 40))
    r = qpsk_map(rng.integers(0, 2, 40))
    y = _noisy(G_SD * s + G_RD * r, 0.5, seed=6)

    posterior = joint_map_detect(y, G_SD, G_RD, 0.5, AugmentedHypothesisSet(p_zero=0.0))

    metrics = -np.abs(y[:, None, None] - G_SD * CONSTELLATION[None, :, None] - G_RD * CONSTELLATION[None, None, :]) ** 2 / 0.5
    source = logsumexp(metrics, axis=2)
    relay = logsumexp(metrics, axis=1)
    expected_source = np.empty(40)
    expected_relay = np.empty(40)
    for bit in range(2):
        zero = LABELS[:, bit] == 0
        expected_source[bit::2] = logsumexp(source[:, zero], axis=1) - logsumexp(source[:, ~zero], axis=1)
        expected_relay[bit::2] = logsumexp(relay[:, zero], axis=1) - logsumexp(relay[:, ~zero], axis=1)

    assert np.allclose(posterior.source_llrs, expected_source, atol=1e-9)
    assert np.allclose(posterior.relay_llrs, expected_relay, atol=1e-9)


def test_posterior_is_normalized():
    y = _noisy(np.zeros(30, dtype=complex), 1.0, seed=3)

    posterior = joint_map_detect(y, G_SD, G_RD, 1.0, AugmentedHypothesisSet(p_zero=0.3))

    assert np.allclose(posterior.posterior.sum(axis=(1, 2)), 1.0, atol=1e-9)


def test_noiseless_hypotheses_are_identified():
    for i, s in enumerate(CONSTELLATION):
        for j, r in enumerate(np.append(CONSTELLATION, 0j)):
            y = np.array([G_SD * s + G_RD * r])
            posterior = joint_map_detect(y, G_SD, G_RD, 0.01, AugmentedHypothesisSet(p_zero=0.2))
            assert np.unravel_index(np.argmax(posterior.posterior[0]), (4, 5)) == (i, j)


def _puncture_error_rate(tx_power: float, seed: int) -> float:
    rng = np.random.default_rng(seed)
    symbols = 10_000
    g_sd = np.sqrt(tx_power) * 0.9 * np.exp(0.3j)
    g_rd = np.sqrt(tx_power) * 0.7 * np.exp(-1.1j)
    s = qpsk_map(rng.integers(0, 2, 2 * symbols))
    r = qpsk_map(rng.integers(0, 2, 2 * symbols))
    punctured = rng.random(symbols) < 0.2
    r[punctured] = 0
    y = g_sd * s + g_rd * r + np.sqrt(0.5) * (rng.standard_normal(symbols) + 1j * rng.standard_normal(symbols))

    posterior = joint_map_detect(y, g_sd, g_rd, 1.0, AugmentedHypothesisSet(p_zero=0.2))
    return float(np.mean(posterior.puncture_flags != punctured))


def test_punctured_positions_are_identified_at_high_snr():
    assert _puncture_error_rate(1000.0, seed=30) < 0.01


def test_puncture_identification_improves_with_snr():
    rates = [_puncture_error_rate(10 ** (snr / 10), seed=7) for snr in (10, 20, 30)]

    assert rates[0] >= rates[1] >= rates[2]


def test_last_slot_has_no_source_copy():
    y = _noisy(G_RD * qpsk_map(np.zeros(8, dtype=np.int8)), 0.1, seed=1)

    posterior = joint_map_detect(y, G_SD, G_RD, 0.1, AugmentedHypothesisSet.for_slot(3, 2, 0.2), slot=3)

    assert posterior.source_llrs is None
    assert np.all(posterior.relay_llrs > 0)


def test_non_positive_noise_variance_is_rejected():
    with pytest.raises(ReceiverError):
        joint_map_detect(np.zeros(2), G_SD, G_RD, 0.0, AugmentedHypothesisSet())


def test_combining_adds_the_two_copies():
    source = np.array([1.0, -2.0, 0.5, 3.0])

    combined = split_and_combine(_posterior(4, source, np.zeros(4)), _posterior(5, None, np.zeros(4)), 4)
    assert np.array_equal(combined, source)

    doubled = split_and_combine(_posterior(4, source, np.zeros(4)), _posterior(5, None, source), 4)
    assert np.array_equal(doubled, 2 * source)


def test_combining_checks_slot_order():
    llrs = np.zeros(4)

    with pytest.raises(ReceiverError):
        split_and_combine(_posterior(2, llrs, llrs), _posterior(4, None, llrs), 2)
    with pytest.raises(ReceiverError):
        split_and_combine(_posterior(3, None, llrs), _posterior(4, None, llrs), 3)


def test_noiseless_combined_copy_decodes():
    spec = CodecSpec(info_bits_per_frame=64)
    bits = np.random.default_rng(12).integers(0, 2, 64)
    llrs = 20.0 * (1 - 2 * encode(bits, spec).astype(np.float64))

    assert np.array_equal(decode_destination_frame(llrs + np.zeros_like(llrs), spec), bits)
