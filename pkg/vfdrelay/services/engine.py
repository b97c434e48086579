"""Monte-Carlo driver for the two-relay successive schedule.

L frames travel in L + 1 slots. In slot l <= L the source sends frame l; from
slot 2 on, the relay that received frame l - 1 forwards it (R1 in even slots,
R2 in odd slots) while the other relay listens. Slot L + 1 is relay-only.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from ..config import ConfigError
from ..logging import log_sweep_point
from ..models import SCHEMES, BerRecord, SimConfig, TheoryPoint
from .analysis import mixture_selection_probability
from .channel import (
    LinkBudget,
    destination_receive,
    draw_fading,
    relay_noise_variance,
    relay_receive,
    zero_frame,
)
from .codec import CodecSpec, encode, iterative_decode, reencode
from .modem import SIGMA2_X, qpsk_map, qpsk_soft_demod
from .receiver import (
    UNIFORM_P_ZERO,
    AugmentedHypothesisSet,
    decode_destination_frame,
    joint_map_detect,
    split_and_combine,
)
from .selector import SelectorConfig, apply_policy, symbol_deviations


STREAM_TAGS = {"bits": 0, "fading": 1, "relay_noise": 2, "destination_noise": 3}
REALIZATIONS_PER_TASK = 4

PRESETS = ("exp1", "exp2")
EXP1_EPSILONS = (0.25, 0.5, 1.0, 2.0, 4.0)
EXP2_SIGMA2_CH = (1.0, 0.01, 0.0)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotPlan:
    slot: int
    source_frame: int | None
    tx_relay: int | None
    relay_frame: int | None
    rx_relay: int | None


def schedule(L: int) -> list[SlotPlan]:
    if L < 2 or L % 2:
        raise ConfigError(f"L: must be an even integer >= 2, got {L}")
    plan = []
    for slot in range(1, L + 2):
        source_frame = slot if slot <= L else None
        if slot == 1:
            tx_relay = None
        else:
            tx_relay = 1 if slot % 2 == 0 else 2
        rx_relay = None
        if source_frame is not None:
            rx_relay = 1 if slot % 2 == 1 else 2
        plan.append(
            SlotPlan(
                slot=slot,
                source_frame=source_frame,
                tx_relay=tx_relay,
                relay_frame=slot - 1 if tx_relay else None,
                rx_relay=rx_relay,
            )
        )
    return plan


@dataclass(frozen=True)
class RealizationStreams:
    """Independent generators per (SNR point, realization, purpose, slot).

    The scheme is not part of the key, so every scheme sees the same bits,
    fading and noise.
    """

    seed: int
    snr_index: int
    realization: int

    def generator(self, tag: str, slot: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            self.seed,
            spawn_key=(self.snr_index, self.realization, STREAM_TAGS[tag], slot),
        )
        return np.random.default_rng(sequence)


@dataclass
class SelectionStats:
    """Relay forwarding counters; integer sums so any merge order gives the same totals."""

    symbols_decoded: int = 0
    symbol_errors_decoded: int = 0
    symbols_forwarded: int = 0
    symbol_errors_forwarded: int = 0

    @property
    def forwarded_fraction(self) -> float:
        return self.symbols_forwarded / self.symbols_decoded if self.symbols_decoded else 0.0

    @property
    def ser_forwarded(self) -> float:
        return self.symbol_errors_forwarded / self.symbols_forwarded if self.symbols_forwarded else 0.0

    @property
    def ser_decoded(self) -> float:
        return self.symbol_errors_decoded / self.symbols_decoded if self.symbols_decoded else 0.0

    def add(self, other: "SelectionStats") -> None:
        self.symbols_decoded += other.symbols_decoded
        self.symbol_errors_decoded += other.symbol_errors_decoded
        self.symbols_forwarded += other.symbols_forwarded
        self.symbol_errors_forwarded += other.symbol_errors_forwarded

    def to_dict(self) -> dict[str, float | int]:
        data: dict[str, float | int] = asdict(self)
        data["forwarded_fraction"] = self.forwarded_fraction
        data["ser_forwarded"] = self.ser_forwarded
        data["ser_decoded"] = self.ser_decoded
        return data


def selection_stats(true_frame: np.ndarray, decoded_frame: np.ndarray, forwarded_frame: np.ndarray) -> SelectionStats:
    wrong = np.abs(true_frame - decoded_frame) > 1e-9
    sent = np.abs(forwarded_frame) > 1e-9
    return SelectionStats(
        symbols_decoded=int(true_frame.size),
        symbol_errors_decoded=int(np.count_nonzero(wrong)),
        symbols_forwarded=int(np.count_nonzero(sent)),
        symbol_errors_forwarded=int(np.count_nonzero(wrong & sent)),
    )


@dataclass
class RealizationResult:
    frame_bit_errors: list[int]
    stats: SelectionStats = field(default_factory=SelectionStats)


@dataclass
class SweepResult:
    records: list[BerRecord]
    stats: dict[str, dict[str, float | int]] = field(default_factory=dict)


def codec_spec_for(config: SimConfig) -> CodecSpec:
    return CodecSpec(
        info_bits_per_frame=config.info_bits,
        doping_rate=config.doping_rate,
        interleaver_seed=config.interleaver_seed,
        decoder_iterations=config.decoder_iterations,
    )


def budget_for(config: SimConfig, snr_db: float) -> LinkBudget:
    return LinkBudget.for_total_snr(
        snr_db,
        offset_sr_db=config.offset_sr_db,
        offset_rd_db=config.offset_rd_db,
        sigma2_ch=config.sigma2_ch,
    )


def destination_p_zero(config: SimConfig, snr_db: float, scheme: str) -> float:
    """Zero-symbol prior at D: 1 - P_C at the operating point for the proposed scheme."""
    if scheme != "proposed" or config.p_zero_mode == "uniform":
        return UNIFORM_P_ZERO
    point = TheoryPoint.from_link(
        snr_db + config.offset_sr_db,
        config.epsilon,
        config.sigma2_ch,
        config.L,
        interference=False,
    )
    return 1.0 - mixture_selection_probability(point)


def _relay_forward(
    config: SimConfig,
    scheme: str,
    spec: CodecSpec,
    budget: LinkBudget,
    y_relay: np.ndarray,
    h_sr: complex,
    h_rr: complex,
    interferer: np.ndarray,
    first_slot: bool,
    true_bits: np.ndarray,
    true_frame: np.ndarray,
) -> tuple[np.ndarray, SelectionStats]:
    selector = SelectorConfig.for_scheme(scheme, config.epsilon, config.frame_threshold)
    if selector.policy == "perfect":
        forwarded = apply_policy(true_bits, None, true_frame, None, None, selector)
        return forwarded, selection_stats(true_frame, true_frame, forwarded)

    # interference power of this slot; h_rr is static within it
    noise_var = relay_noise_variance(budget, interference_energy=0.0 if first_slot else 1.0, h_rr=h_rr)
    gain = math.sqrt(budget.tx_power) * h_sr
    _, decoded_bits = iterative_decode(qpsk_soft_demod(y_relay, gain, noise_var), spec)
    x_hat = qpsk_map(reencode(decoded_bits, spec))

    deviations = None
    if selector.policy == "symbol_selective":
        sigma2_z: float | np.ndarray = noise_var / 2.0
        if config.genie_noise:
            sigma2_z = np.where(np.abs(interferer) > 0, noise_var / 2.0, 0.5)
        deviations = symbol_deviations(y_relay, h_sr, budget.tx_power, x_hat, sigma2_z, SIGMA2_X)

    forwarded = apply_policy(true_bits, decoded_bits, true_frame, x_hat, deviations, selector)
    return forwarded, selection_stats(true_frame, x_hat, forwarded)


def run_realization(
    config: SimConfig,
    snr_db: float,
    scheme: str,
    streams: RealizationStreams,
) -> RealizationResult:
    """One channel realization of the full chain; returns info-bit errors per frame."""
    spec = codec_spec_for(config)
    budget = budget_for(config, snr_db)
    amplitude = math.sqrt(budget.tx_power)
    p_zero = destination_p_zero(config, snr_db, scheme)
    length = spec.symbols_per_frame

    info = {
        frame: streams.generator("bits", frame).integers(0, 2, config.info_bits, dtype=np.int8)
        for frame in range(1, config.L + 1)
    }
    source_frames = {frame: qpsk_map(encode(bits, spec)) for frame, bits in info.items()}

    forwarded: dict[int, np.ndarray] = {}
    posteriors = {}
    stats = SelectionStats()
    for plan in schedule(config.L):
        fading = draw_fading(budget, streams.generator("fading", plan.slot))
        x_src = source_frames[plan.source_frame] if plan.source_frame else zero_frame(length)
        x_relay = forwarded[plan.relay_frame] if plan.relay_frame else zero_frame(length)

        if plan.rx_relay is not None:
            y_relay = relay_receive(
                x_src,
                x_relay,
                fading,
                budget,
                streams.generator("relay_noise", plan.slot),
                relay=plan.rx_relay,
            )
            forwarded[plan.source_frame], frame_stats = _relay_forward(
                config,
                scheme,
                spec,
                budget,
                y_relay,
                fading.h_sr(plan.rx_relay),
                fading.h_rr,
                x_relay,
                plan.slot == 1,
                info[plan.source_frame],
                x_src,
            )
            stats.add(frame_stats)

        tx_relay = plan.tx_relay or 1
        y_dest = destination_receive(
            x_src,
            x_relay,
            fading,
            budget,
            streams.generator("destination_noise", plan.slot),
            relay=tx_relay,
        )
        posteriors[plan.slot] = joint_map_detect(
            y_dest,
            amplitude * fading.h_sd,
            amplitude * fading.h_rd(tx_relay),
            1.0,
            AugmentedHypothesisSet.for_slot(plan.slot, config.L, p_zero),
            slot=plan.slot,
        )

    frame_bit_errors = []
    for frame in range(1, config.L + 1):
        combined = split_and_combine(posteriors[frame], posteriors[frame + 1], frame)
        decoded = decode_destination_frame(combined, spec)
        frame_bit_errors.append(int(np.count_nonzero(decoded != info[frame])))
    return RealizationResult(frame_bit_errors=frame_bit_errors, stats=stats)


def _run_batch(
    config: SimConfig,
    snr_index: int,
    snr_db: float,
    start: int,
    stop: int,
) -> dict[str, tuple[BerRecord, SelectionStats]]:
    totals: dict[str, tuple[BerRecord, SelectionStats]] = {}
    for scheme in config.schemes:
        record = BerRecord(scheme=config.scheme_label(scheme), snr_db=snr_db, seed=config.seed)
        stats = SelectionStats()
        for k in range(start, stop):
            result = run_realization(config, snr_db, scheme, RealizationStreams(config.seed, snr_index, k))
            record.add_frames(result.frame_bit_errors, config.info_bits)
            stats.add(result.stats)
        totals[scheme] = (record, stats)
    return totals


def _batches(config: SimConfig) -> Iterator[tuple[int, float, int, int]]:
    for snr_index, snr_db in enumerate(config.snr_points_db):
        for start in range(0, config.realizations, REALIZATIONS_PER_TASK):
            yield snr_index, snr_db, start, min(start + REALIZATIONS_PER_TASK, config.realizations)


def run_sweep(
    config: SimConfig,
    *,
    workers: int | None = None,
    logger: logging.Logger | None = None,
) -> SweepResult:
    logger = logger or _LOGGER
    config.validate()
    if not config.schemes:
        return SweepResult(records=[])
    workers = workers or config.workers

    records: dict[tuple[int, str], BerRecord] = {}
    stats: dict[tuple[int, str], SelectionStats] = {}
    for snr_index, snr_db in enumerate(config.snr_points_db):
        for scheme in config.schemes:
            records[(snr_index, scheme)] = BerRecord(scheme=config.scheme_label(scheme), snr_db=snr_db, seed=config.seed)
            stats[(snr_index, scheme)] = SelectionStats()

    batches = list(_batches(config))
    logger.debug("任务批次: %s workers=%s", len(batches), workers)

    def collect(batch: tuple[int, float, int, int], totals: dict[str, tuple[BerRecord, SelectionStats]]) -> None:
        snr_index = batch[0]
        for scheme, (record, batch_stats) in totals.items():
            key = (snr_index, scheme)
            records[key] = records[key].merge(record)
            stats[key].add(batch_stats)
        logger.debug("批次完成: snr_index=%s realizations=%s..%s", snr_index, batch[2], batch[3] - 1)

    if workers == 1:
        for batch in batches:
            collect(batch, _run_batch(config, *batch))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_batch, config, *batch) for batch in batches]
            for batch, future in zip(batches, futures):
                collect(batch, future.result())

    ordered = []
    stats_out: dict[str, dict[str, float | int]] = {}
    for snr_index, _ in enumerate(config.snr_points_db):
        for scheme in config.schemes:
            record = records[(snr_index, scheme)]
            point_stats = stats[(snr_index, scheme)]
            ordered.append(record)
            stats_out[f"{record.scheme}|{record.snr_db!r}"] = point_stats.to_dict()
            log_sweep_point(logger, record.scheme, record.snr_db, record.ber, record.bit_errors, record.bits_total)
            logger.info(
                "中继转发统计: forwarded=%.3f ser_forwarded=%.3e ser_decoded=%.3e",
                point_stats.forwarded_fraction,
                point_stats.ser_forwarded,
                point_stats.ser_decoded,
            )
    return SweepResult(records=ordered, stats=stats_out)


def run_experiment(
    config: SimConfig,
    *,
    workers: int | None = None,
    logger: logging.Logger | None = None,
) -> list[BerRecord]:
    return run_sweep(config, workers=workers, logger=logger).records


def expand_preset(name: str, base: SimConfig) -> list[SimConfig]:
    """Configurations of a named experiment; variants share the base seed."""
    if name == "exp1":
        return [
            base.with_overrides(schemes=["proposed"], epsilon=epsilon, sigma2_ch=1.0, label=f"eps={epsilon:g}")
            for epsilon in EXP1_EPSILONS
        ]
    if name == "exp2":
        return [
            base.with_overrides(schemes=list(SCHEMES), epsilon=1.0, sigma2_ch=sigma2_ch, label=f"sigma2_ch={sigma2_ch:g}")
            for sigma2_ch in EXP2_SIGMA2_CH
        ]
    raise ConfigError(f"Unknown run preset {name!r}; expected one of {list(PRESETS)}")
