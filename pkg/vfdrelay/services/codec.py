"""Rate-1/2 serially concatenated code shared by the source and both relays.

Chain: outer convolutional code G = (3, 2)_8 (memory 1, terminated) ->
pseudo-random interleaver -> doped accumulator -> QPSK. Generator taps read
MSB first, the MSB tapping the current input: 3_8 -> 1 + D, 2_8 -> 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .trellis import LLR_CLIP, accumulator_siso, outer_siso


DEFAULT_GENERATORS = (0o3, 0o2)


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class CodecSpec:
    info_bits_per_frame: int = 512
    outer_generators: tuple[int, int] = DEFAULT_GENERATORS
    doping_rate: int = 2
    interleaver_seed: int = 1
    decoder_iterations: int = 8

    def __post_init__(self) -> None:
        if self.info_bits_per_frame < 1:
            raise CodecError(f"info_bits_per_frame must be positive, got {self.info_bits_per_frame}")
        if tuple(self.outer_generators) != DEFAULT_GENERATORS:
            raise CodecError(f"Only G=(3,2)_8 has a SISO decoder, got {self.outer_generators}")
        if self.doping_rate < 1:
            raise CodecError(f"doping_rate must be >= 1, got {self.doping_rate}")
        if self.decoder_iterations < 1:
            raise CodecError(f"decoder_iterations must be >= 1, got {self.decoder_iterations}")

    @property
    def memory(self) -> int:
        return max(g.bit_length() for g in self.outer_generators) - 1

    @property
    def coded_length(self) -> int:
        return len(self.outer_generators) * (self.info_bits_per_frame + self.memory)

    @property
    def symbols_per_frame(self) -> int:
        return self.coded_length // 2


def clip_llrs(llrs: np.ndarray) -> np.ndarray:
    llrs = np.nan_to_num(np.asarray(llrs, dtype=np.float64), nan=0.0, posinf=LLR_CLIP, neginf=-LLR_CLIP)
    return np.clip(llrs, -LLR_CLIP, LLR_CLIP)


def outer_conv_encode(info_bits: np.ndarray, generators: tuple[int, ...] = DEFAULT_GENERATORS) -> np.ndarray:
    info_bits = np.asarray(info_bits, dtype=np.int8).reshape(-1)
    if info_bits.size == 0:
        raise CodecError("Cannot encode an empty bit vector")
    memory = max(g.bit_length() for g in generators) - 1
    padded = np.concatenate([info_bits, np.zeros(memory, dtype=np.int8)])
    # window[k] = (u_k, u_{k-1}, ..., u_{k-memory}) with zero history
    history = np.concatenate([np.zeros(memory, dtype=np.int8), padded])
    window = np.stack([history[memory - i: memory - i + padded.size] for i in range(memory + 1)], axis=1)
    coded = np.empty((padded.size, len(generators)), dtype=np.int8)
    for j, generator in enumerate(generators):
        taps = np.array([(generator >> (memory - i)) & 1 for i in range(memory + 1)], dtype=np.int8)
        coded[:, j] = (window @ taps) % 2
    return coded.reshape(-1)


@lru_cache(maxsize=32)
def _permutation(length: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(length)
    perm.setflags(write=False)
    return perm


def interleaver_permutation(spec: CodecSpec) -> np.ndarray:
    return _permutation(spec.coded_length, spec.interleaver_seed)


def interleave(bits: np.ndarray, spec: CodecSpec) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != spec.coded_length:
        raise CodecError(f"Interleaver expects {spec.coded_length} entries, got {bits.shape[-1]}")
    return bits[..., interleaver_permutation(spec)]


def deinterleave(llrs: np.ndarray, spec: CodecSpec) -> np.ndarray:
    llrs = np.asarray(llrs)
    if llrs.shape[-1] != spec.coded_length:
        raise CodecError(f"Deinterleaver expects {spec.coded_length} entries, got {llrs.shape[-1]}")
    out = np.empty_like(llrs)
    out[..., interleaver_permutation(spec)] = llrs
    return out


def doped_accumulate(bits: np.ndarray, doping_rate: int) -> np.ndarray:
    """a_k = a_{k-1} ^ c_k; every doping_rate-th output carries c_k instead of a_k."""
    if doping_rate < 1:
        raise CodecError(f"doping_rate must be >= 1, got {doping_rate}")
    bits = np.asarray(bits, dtype=np.int8).reshape(-1)
    accumulated = np.bitwise_xor.accumulate(bits) if bits.size else bits.copy()
    doped = (np.arange(bits.size) + 1) % doping_rate == 0
    return np.where(doped, bits, accumulated).astype(np.int8)


def encode(info_bits: np.ndarray, spec: CodecSpec) -> np.ndarray:
    info_bits = np.asarray(info_bits, dtype=np.int8).reshape(-1)
    if info_bits.size != spec.info_bits_per_frame:
        raise CodecError(f"Expected {spec.info_bits_per_frame} info bits, got {info_bits.size}")
    coded = outer_conv_encode(info_bits, spec.outer_generators)
    return doped_accumulate(interleave(coded, spec), spec.doping_rate)


def reencode(hard_info_bits: np.ndarray, spec: CodecSpec) -> np.ndarray:
    """Relay re-encoding: bit-identical to the source chain."""
    return encode(hard_info_bits, spec)


def iterative_decode(channel_llrs: np.ndarray, spec: CodecSpec) -> tuple[np.ndarray, np.ndarray]:
    """Turbo-style exchange between the accumulator and outer SISOs.

    Returns (a-posteriori info LLRs, hard info bits); ties resolve to bit 0.
    """
    channel = clip_llrs(channel_llrs).reshape(-1)
    if channel.size != spec.coded_length:
        raise CodecError(f"Decoder expects {spec.coded_length} LLRs, got {channel.size}")

    apriori_inner = np.zeros(spec.coded_length)
    info_posterior = np.zeros(spec.info_bits_per_frame + spec.memory)
    for _ in range(spec.decoder_iterations):
        inner_extrinsic = accumulator_siso(channel, apriori_inner, spec.doping_rate)
        coded_extrinsic, info_posterior = outer_siso(deinterleave(inner_extrinsic, spec))
        apriori_inner = interleave(coded_extrinsic, spec)

    info_llrs = info_posterior[: spec.info_bits_per_frame]
    hard_bits = (info_llrs < 0).astype(np.int8)
    return info_llrs, hard_bits
