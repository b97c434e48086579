from __future__ import annotations

import numpy as np
import pytest

from vfdrelay.config import ConfigError
from vfdrelay.models import SimConfig
from vfdrelay.services.engine import (
    RealizationStreams,
    SelectionStats,
    destination_p_zero,
    expand_preset,
    run_experiment,
    run_realization,
    run_sweep,
    schedule,
    selection_stats,
)
from vfdrelay.services.receiver import UNIFORM_P_ZERO


def _small_config(**changes) -> SimConfig:
    base = SimConfig(
        L=2,
        info_bits=32,
        snr_points_db=[10.0],
        schemes=["proposed", "crc_sdf"],
        realizations=3,
        seed=42,
        decoder_iterations=3,
    )
    return base.with_overrides(**changes)


def test_smallest_schedule():
    plan = schedule(2)

    assert [(p.slot, p.source_frame, p.tx_relay, p.relay_frame, p.rx_relay) for p in plan] == [
        (1, 1, None, None, 1),
        (2, 2, 1, 1, 2),
        (3, None, 2, 2, None),
    ]


def test_every_frame_reaches_destination_twice():
    plan = schedule(20)
    appearances = {frame: 0 for frame in range(1, 21)}
    for slot in plan:
        for frame in (slot.source_frame, slot.relay_frame):
            if frame is not None:
                appearances[frame] += 1

    assert len(plan) == 21
    assert set(appearances.values()) == {2}


def test_relays_alternate():
    plan = schedule(20)

    assert all(p.slot % 2 == 0 for p in plan if p.tx_relay == 1)
    assert all(p.slot % 2 == 1 and p.slot >= 3 for p in plan if p.tx_relay == 2)
    assert all(p.rx_relay != p.tx_relay for p in plan if p.rx_relay)


def test_odd_frame_count_is_rejected():
    with pytest.raises(ConfigError):
        schedule(3)


def test_streams_are_keyed_by_purpose_and_slot():
    streams = RealizationStreams(seed=1, snr_index=0, realization=0)

    first = streams.generator("fading", 1).standard_normal(4)
    assert np.array_equal(first, streams.generator("fading", 1).standard_normal(4))
    assert not np.array_equal(first, streams.generator("fading", 2).standard_normal(4))
    assert not np.array_equal(first, streams.generator("relay_noise", 1).standard_normal(4))
    assert not np.array_equal(first, RealizationStreams(1, 0, 1).generator("fading", 1).standard_normal(4))


def test_perfect_relays_at_high_snr_make_no_errors():
    config = _small_config(schemes=["perfect"], sigma2_ch=0.0, info_bits=64)
    for k in range(10):
        result = run_realization(config, 30.0, "perfect", RealizationStreams(config.seed, 0, k))
        assert result.frame_bit_errors == [0, 0]


def test_realization_is_deterministic():
    config = _small_config()
    streams = RealizationStreams(config.seed, 0, 5)

    first = run_realization(config, 8.0, "proposed", streams)
    second = run_realization(config, 8.0, "proposed", streams)

    assert first.frame_bit_errors == second.frame_bit_errors
    assert first.stats == second.stats


def test_failed_relays_forward_nothing():
    config = _small_config(schemes=["crc_sdf"], offset_sr_db=-20.0, info_bits=64)
    for k in range(3):
        result = run_realization(config, 10.0, "crc_sdf", RealizationStreams(config.seed, 0, k))
        assert result.stats.symbols_forwarded == 0
        assert result.stats.symbols_decoded == 2 * 65


def test_bits_are_conserved_per_record():
    config = _small_config(snr_points_db=[6.0, 12.0])
    records = run_experiment(config)

    assert [(r.scheme, r.snr_db) for r in records] == [
        ("proposed", 6.0),
        ("crc_sdf", 6.0),
        ("proposed", 12.0),
        ("crc_sdf", 12.0),
    ]
    for record in records:
        assert record.bits_total == config.realizations * config.L * config.info_bits
        assert record.frames_total == config.realizations * config.L
        assert 0 <= record.bit_errors <= record.bits_total
        assert record.realizations == config.realizations


def test_results_do_not_depend_on_worker_count():
    config = _small_config(realizations=5)

    serial = run_experiment(config, workers=1)
    parallel = run_experiment(config, workers=2)

    assert serial == parallel


def test_empty_scheme_list_is_a_vacuous_sweep():
    assert run_experiment(_small_config(schemes=[])) == []


def test_sweep_reports_selection_stats():
    result = run_sweep(_small_config(schemes=["proposed"]))

    stats = result.stats["proposed|10.0"]
    assert 0.0 <= stats["forwarded_fraction"] <= 1.0
    assert stats["symbols_decoded"] == 3 * 2 * 33


def test_labels_go_into_the_scheme_column():
    records = run_experiment(_small_config(schemes=["proposed"], realizations=1, label="eps=1"))

    assert records[0].scheme == "proposed@eps=1"


def test_selection_stats_counts():
    true = np.array([1, -1, 1j, -1j], dtype=complex)
    decoded = np.array([1, 1, 1j, -1j], dtype=complex)
    forwarded = np.array([1, 1, 0, 0], dtype=complex)

    stats = selection_stats(true, decoded, forwarded)

    assert stats == SelectionStats(symbols_decoded=4, symbol_errors_decoded=1, symbols_forwarded=2, symbol_errors_forwarded=1)
    assert stats.forwarded_fraction == 0.5
    assert stats.ser_forwarded == 0.5
    assert stats.ser_decoded == 0.25


def test_destination_prior():
    config = _small_config()

    assert destination_p_zero(config, 10.0, "crc_sdf") == UNIFORM_P_ZERO
    assert destination_p_zero(config.with_overrides(p_zero_mode="uniform"), 10.0, "proposed") == UNIFORM_P_ZERO
    assert 0.0 < destination_p_zero(config, 10.0, "proposed") < 1.0


def test_presets():
    base = _small_config()
    exp1 = expand_preset("exp1", base)
    exp2 = expand_preset("exp2", base)

    assert [c.epsilon for c in exp1] == [0.25, 0.5, 1.0, 2.0, 4.0]
    assert all(c.schemes == ["proposed"] and c.sigma2_ch == 1.0 for c in exp1)
    assert exp1[0].label == "eps=0.25"
    assert [c.sigma2_ch for c in exp2] == [1.0, 0.01, 0.0]
    assert all(len(c.schemes) == 4 and c.epsilon == 1.0 for c in exp2)
    assert exp2[1].label == "sigma2_ch=0.01"
    with pytest.raises(ConfigError):
        expand_preset("fig2", base)


def _interfered_config(**changes) -> SimConfig:
    return _small_config(
        L=4,
        info_bits=256,
        decoder_iterations=6,
        snr_points_db=[16.0],
        schemes=["proposed"],
        sigma2_ch=1.0,
        realizations=6,
    ).with_overrides(**changes)


def test_forwarded_symbols_are_cleaner_than_decoded_symbols():
    stats = run_sweep(_interfered_config()).stats["proposed|16.0"]

    assert stats["symbol_errors_decoded"] > 0
    assert 0 < stats["symbols_forwarded"] < stats["symbols_decoded"]
    assert stats["ser_forwarded"] < stats["ser_decoded"]


def test_loose_threshold_forwards_more_and_hurts_under_interference():
    strict = run_sweep(_interfered_config(epsilon=0.25))
    loose = run_sweep(_interfered_config(epsilon=4.0))

    assert loose.stats["proposed|16.0"]["forwarded_fraction"] > strict.stats["proposed|16.0"]["forwarded_fraction"]
    assert strict.records[0].ber < loose.records[0].ber


def test_fully_punctured_relays_leave_clean_source_decoding():
    config = _small_config(schemes=["proposed"], epsilon=0.0, sigma2_ch=0.0, info_bits=64, realizations=4)

    assert destination_p_zero(config, 35.0, "proposed") == 1.0
    for k in range(config.realizations):
        result = run_realization(config, 35.0, "proposed", RealizationStreams(config.seed, 0, k))
        assert result.stats.symbols_forwarded == 0
        assert result.frame_bit_errors == [0, 0]
