from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from vfdrelay.services.channel import (
    ChannelError,
    FadingRealization,
    LinkBudget,
    check_symbol_frame,
    complex_gaussian,
    destination_receive,
    draw_fading,
    link_snr_table,
    link_variances,
    relay_noise_variance,
    relay_receive,
    zero_frame,
)
from vfdrelay.services.modem import qpsk_map


def _frame(length: int, seed: int = 0) -> np.ndarray:
    return qpsk_map(np.random.default_rng(seed).integers(0, 2, 2 * length))


def test_rr_link_follows_sigma2_ch():
    assert link_snr_table(LinkBudget(rho_sd_db=10.0, sigma2_ch=0.0)).snr_rr == 0.0
    table = link_snr_table(LinkBudget(rho_sd_db=10.0, sigma2_ch=1.0))
    assert table.snr_rr == table.snr_sr


def test_total_snr_budget_keeps_unit_sd_variance():
    budget = LinkBudget.for_total_snr(12.0)
    variances = link_variances(budget)

    assert budget.tx_power == pytest.approx(10 ** 1.2)
    assert variances["sd"] == pytest.approx(1.0)
    assert variances["sr"] == pytest.approx(10 ** 1.06)
    assert link_snr_table(budget).total_snr_db == pytest.approx(12.0)


def test_zero_rr_variance_gives_exact_zero():
    fading = draw_fading(LinkBudget.for_total_snr(10.0, sigma2_ch=0.0), np.random.default_rng(1))

    assert fading.h_rr == 0


def test_draw_fading_is_deterministic():
    budget = LinkBudget.for_total_snr(10.0)

    assert draw_fading(budget, np.random.default_rng(7)) == draw_fading(budget, np.random.default_rng(7))


def test_sd_gain_moment_matches_link_variance():
    budget = LinkBudget.for_total_snr(5.0)
    rng = np.random.default_rng(2024)
    gains = [abs(draw_fading(budget, rng).h_sd) ** 2 for _ in range(50_000)]

    assert np.mean(gains) == pytest.approx(link_variances(budget)["sd"], rel=0.03)


def test_identity_relay_channel_adds_only_noise():
    x = _frame(32)
    fading = FadingRealization(h_sr1=1.0, h_sr2=1.0, h_rr=0.0, h_sd=1.0, h_r1d=1.0, h_r2d=1.0)
    budget = LinkBudget(rho_sd_db=0.0, tx_power=1.0)

    y = relay_receive(x, zero_frame(32), fading, budget, np.random.default_rng(5), relay=1)
    noise = complex_gaussian(np.random.default_rng(5), 32, 1.0)

    assert np.allclose(y, x + noise)


def test_punctured_interferer_is_transparent():
    x = _frame(16)
    budget = LinkBudget.for_total_snr(10.0)
    fading = draw_fading(budget, np.random.default_rng(3))
    other = replace(fading, h_rr=5.0 - 2.0j)

    first = relay_receive(x, zero_frame(16), fading, budget, np.random.default_rng(9), relay=2)
    second = relay_receive(x, zero_frame(16), other, budget, np.random.default_rng(9), relay=2)

    assert np.array_equal(first, second)


def test_interference_plus_noise_variance():
    budget = LinkBudget.for_total_snr(0.0, offset_sr_db=0.0, sigma2_ch=1.0)
    rng = np.random.default_rng(17)
    samples = []
    for _ in range(40_000):
        fading = draw_fading(budget, rng)
        samples.append(relay_receive(zero_frame(4), _frame(4, 1), fading, budget, rng, relay=1))
    power = np.mean(np.abs(np.concatenate(samples)) ** 2)

    assert power == pytest.approx(relay_noise_variance(budget), rel=0.02)


def test_frame_length_mismatch_is_rejected():
    budget = LinkBudget.for_total_snr(10.0)
    fading = draw_fading(budget, np.random.default_rng(0))

    with pytest.raises(ChannelError):
        destination_receive(_frame(8), _frame(6), fading, budget, np.random.default_rng(0), relay=1)


def test_symbol_frame_check():
    frame = _frame(4)
    frame[1] = 0

    assert check_symbol_frame(frame, 4).size == 4
    with pytest.raises(ChannelError):
        check_symbol_frame(np.array([0.5 + 0j]))


def test_off_constellation_frames_never_reach_the_air():
    budget = LinkBudget.for_total_snr(10.0)
    fading = draw_fading(budget, np.random.default_rng(0))

    with pytest.raises(ChannelError):
        relay_receive(2.0 * _frame(4), zero_frame(4), fading, budget, np.random.default_rng(0), relay=1)
    with pytest.raises(ChannelError):
        destination_receive(_frame(4), np.full(4, 0.3 + 0j), fading, budget, np.random.default_rng(0), relay=2)


def test_slot_noise_variance_uses_the_drawn_rr_gain():
    budget = LinkBudget.for_total_snr(10.0, offset_sr_db=0.0, sigma2_ch=1.0)

    assert relay_noise_variance(budget, h_rr=0.0) == 1.0
    assert relay_noise_variance(budget, h_rr=0.3 - 0.4j) == pytest.approx(budget.tx_power * 0.25 + 1.0)
    assert relay_noise_variance(budget, 0.0, h_rr=3.0) == 1.0


def test_interference_power_adds_to_noise_within_a_slot():
    budget = LinkBudget.for_total_snr(6.0, offset_sr_db=0.0, sigma2_ch=1.0)
    fading = FadingRealization(h_sr1=1.0, h_sr2=1.0, h_rr=0.6 + 0.8j, h_sd=1.0, h_r1d=1.0, h_r2d=1.0)
    interferer = _frame(50_000, 4)

    z = relay_receive(zero_frame(50_000), interferer, fading, budget, np.random.default_rng(8), relay=1)
    noise = z - np.sqrt(budget.tx_power) * fading.h_rr * interferer

    assert np.mean(np.abs(z) ** 2) == pytest.approx(relay_noise_variance(budget, h_rr=fading.h_rr), rel=0.02)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(1.0, rel=0.02)


def test_faded_interference_plus_noise_is_gaussian():
    budget = LinkBudget.for_total_snr(3.0, offset_sr_db=0.0, sigma2_ch=1.0)
    rng = np.random.default_rng(31)
    samples = []
    for slot in range(40_000):
        fading = draw_fading(budget, rng)
        samples.append(relay_receive(zero_frame(4), _frame(4, slot), fading, budget, rng, relay=2))
    z = np.concatenate(samples)

    assert abs(stats.kurtosis(z.real)) < 0.1
    assert abs(stats.kurtosis(z.imag)) < 0.1
    assert np.var(z.real) == pytest.approx(relay_noise_variance(budget) / 2.0, rel=0.03)
