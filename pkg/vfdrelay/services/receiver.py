"""Modified MAP detection at the destination.

Each slot carries one source frame and the relay copy of the previous frame, so
every received symbol is detected jointly over (source symbol, relay symbol)
with the relay alphabet augmented by the zero-energy symbol. Punctured relay
positions then show up as posterior mass on that symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codec import CodecSpec, iterative_decode
from .modem import CONSTELLATION, LABELS, LLR_CLIP


UNIFORM_P_ZERO = 1.0 / (CONSTELLATION.size + 1)
_LOG2 = math.log(2.0)


class ReceiverError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentedHypothesisSet:
    """Priors over the source alphabet and the relay alphabet Q + {0}.

    Hypotheses with zero prior are dropped, so p_zero = 1 leaves the relay
    alphabet {0} and p_zero = 0 leaves plain QPSK.
    """

    p_zero: float = UNIFORM_P_ZERO
    source_present: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_zero <= 1.0:
            raise ReceiverError(f"p_zero must lie in [0, 1], got {self.p_zero}")

    @classmethod
    def for_slot(cls, slot: int, L: int, p_zero: float) -> "AugmentedHypothesisSet":
        if not 1 <= slot <= L + 1:
            raise ReceiverError(f"slot {slot} outside 1..{L + 1}")
        if slot == 1:
            return cls(p_zero=1.0, source_present=True)
        return cls(p_zero=p_zero, source_present=slot <= L)

    def source_alphabet(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.source_present:
            return np.zeros(1, dtype=np.complex128), np.zeros(1)
        size = CONSTELLATION.size
        return CONSTELLATION.copy(), np.full(size, -math.log(size))

    def relay_alphabet(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(symbols, log priors, row into LABELS or -1 for the zero symbol)."""
        symbols: list[complex] = []
        log_priors: list[float] = []
        label_rows: list[int] = []
        if self.p_zero < 1.0:
            share = math.log((1.0 - self.p_zero) / CONSTELLATION.size)
            for q, symbol in enumerate(CONSTELLATION):
                symbols.append(complex(symbol))
                log_priors.append(share)
                label_rows.append(q)
        if self.p_zero > 0.0:
            symbols.append(0j)
            log_priors.append(math.log(self.p_zero))
            label_rows.append(-1)
        return (
            np.array(symbols, dtype=np.complex128),
            np.array(log_priors),
            np.array(label_rows, dtype=np.int64),
        )


@dataclass
class FramePosterior:
    slot: int
    log_posterior: np.ndarray  # (M, |source alphabet|, |relay alphabet|)
    source_llrs: np.ndarray | None
    relay_llrs: np.ndarray
    puncture_posterior: np.ndarray

    @property
    def posterior(self) -> np.ndarray:
        return np.exp(self.log_posterior)

    @property
    def puncture_flags(self) -> np.ndarray:
        return self.puncture_posterior > 0.5


def _bit_llrs(log_marginal: np.ndarray, label_rows: np.ndarray, zero_index: int | None) -> np.ndarray:
    """Per-bit LLRs from a per-symbol log marginal over an alphabet.

    The zero symbol carries no bit information, so it counts half towards each
    bit value: log[2*P(b=0, r!=0) + P(r=0)] - log[2*P(b=1, r!=0) + P(r=0)].
    """
    frames = log_marginal.shape[0]
    llrs = np.zeros(frames * 2)
    labelled = label_rows >= 0
    if not np.any(labelled):
        return llrs
    for bit in range(2):
        bits = np.full(label_rows.shape, -1)
        bits[labelled] = LABELS[label_rows[labelled], bit]
        zero_side = _LOG2 + logsumexp(log_marginal[:, bits == 0], axis=1)
        one_side = _LOG2 + logsumexp(log_marginal[:, bits == 1], axis=1)
        if zero_index is not None:
            zero_side = np.logaddexp(zero_side, log_marginal[:, zero_index])
            one_side = np.logaddexp(one_side, log_marginal[:, zero_index])
        llrs[bit::2] = zero_side - one_side
    return np.clip(llrs, -LLR_CLIP, LLR_CLIP)


def joint_map_detect(
    y_slot: np.ndarray,
    g_sd: complex,
    g_rd: complex,
    noise_var: float,
    priors: AugmentedHypothesisSet,
    *,
    slot: int = 0,
) -> FramePosterior:
    """Exact Gaussian-likelihood posterior over (source, relay) hypotheses per symbol.

    `g_sd` and `g_rd` are the effective gains sqrt(P) * h; `noise_var` is the
    complex noise variance.
    """
    if not noise_var > 0:
        raise ReceiverError(f"noise_var must be positive, got {noise_var}")
    y = np.asarray(y_slot, dtype=np.complex128).reshape(-1)
    source_symbols, source_log_priors = priors.source_alphabet()
    relay_symbols, relay_log_priors, label_rows = priors.relay_alphabet()

    means = g_sd * source_symbols[:, None] + g_rd * relay_symbols[None, :]
    distance = np.abs(y[:, None, None] - means[None, :, :]) ** 2
    log_post = -distance / noise_var + source_log_priors[None, :, None] + relay_log_priors[None, None, :]
    log_post -= logsumexp(log_post, axis=(1, 2), keepdims=True)

    source_llrs = None
    if priors.source_present:
        source_marginal = logsumexp(log_post, axis=2)
        source_llrs = _bit_llrs(source_marginal, np.arange(CONSTELLATION.size), None)

    relay_marginal = logsumexp(log_post, axis=1)
    zero_positions = np.flatnonzero(label_rows < 0)
    zero_index = int(zero_positions[0]) if zero_positions.size else None
    relay_llrs = _bit_llrs(relay_marginal, label_rows, zero_index)
    if zero_index is None:
        puncture = np.zeros(y.size)
    else:
        puncture = np.exp(relay_marginal[:, zero_index])

    return FramePosterior(
        slot=slot,
        log_posterior=log_post,
        source_llrs=source_llrs,
        relay_llrs=relay_llrs,
        puncture_posterior=puncture,
    )


def split_and_combine(source_slot: FramePosterior, relay_slot: FramePosterior, frame: int) -> np.ndarray:
    """Combined coded-bit LLRs of `frame`: source copy from slot `frame`, relay copy from slot `frame + 1`."""
    if source_slot.slot != frame or relay_slot.slot != frame + 1:
        raise ReceiverError(
            f"Frame {frame} combines slots {frame} and {frame + 1}, got {source_slot.slot} and {relay_slot.slot}"
        )
    if source_slot.source_llrs is None:
        raise ReceiverError(f"Slot {source_slot.slot} carries no source frame")
    if source_slot.source_llrs.size != relay_slot.relay_llrs.size:
        raise ReceiverError(
            f"LLR length mismatch: {source_slot.source_llrs.size} vs {relay_slot.relay_llrs.size}"
        )
    return source_slot.source_llrs + relay_slot.relay_llrs


def decode_destination_frame(combined: np.ndarray, codec_spec: CodecSpec) -> np.ndarray:
    _, hard_bits = iterative_decode(combined, codec_spec)
    return hard_bits
