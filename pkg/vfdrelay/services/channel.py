"""Block-fading links of the two-relay network and the slot superposition equations.

Noise is CN(0, 1) at every receiver; a link's average SNR is P times its channel
variance, so the variances below are the link SNRs divided by P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


SYMBOL_TOLERANCE = 1e-12


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class LinkBudget:
    rho_sd_db: float
    offset_sr_db: float = 10.6
    offset_rd_db: float = 4.4
    sigma2_ch: float = 1.0
    tx_power: float = 1.0

    @classmethod
    def for_total_snr(
        cls,
        snr_db: float,
        offset_sr_db: float = 10.6,
        offset_rd_db: float = 4.4,
        sigma2_ch: float = 1.0,
    ) -> "LinkBudget":
        """Sweep point on the total-links-SNR axis: P / N0 = snr_db and unit S->D variance."""
        return cls(
            rho_sd_db=snr_db,
            offset_sr_db=offset_sr_db,
            offset_rd_db=offset_rd_db,
            sigma2_ch=sigma2_ch,
            tx_power=10.0 ** (snr_db / 10.0),
        )


@dataclass(frozen=True)
class LinkSnrTable:
    snr_sd: float
    snr_sr: float
    snr_rd: float
    snr_rr: float
    total_snr_db: float


@dataclass(frozen=True)
class FadingRealization:
    h_sr1: complex
    h_sr2: complex
    h_rr: complex
    h_sd: complex
    h_r1d: complex
    h_r2d: complex

    def h_sr(self, relay: int) -> complex:
        return self.h_sr1 if relay == 1 else self.h_sr2

    def h_rd(self, relay: int) -> complex:
        return self.h_r1d if relay == 1 else self.h_r2d


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def link_snr_table(budget: LinkBudget) -> LinkSnrTable:
    snr_sd = db_to_linear(budget.rho_sd_db)
    snr_sr = db_to_linear(budget.rho_sd_db + budget.offset_sr_db)
    snr_rd = db_to_linear(budget.rho_sd_db + budget.offset_rd_db)
    return LinkSnrTable(
        snr_sd=snr_sd,
        snr_sr=snr_sr,
        snr_rd=snr_rd,
        snr_rr=budget.sigma2_ch * snr_sr,
        total_snr_db=10.0 * math.log10(budget.tx_power),
    )


def link_variances(budget: LinkBudget) -> dict[str, float]:
    table = link_snr_table(budget)
    power = budget.tx_power
    return {
        "sr": table.snr_sr / power,
        "rr": table.snr_rr / power,
        "sd": table.snr_sd / power,
        "rd": table.snr_rd / power,
    }


def complex_gaussian(rng: np.random.Generator, size: int | tuple[int, ...] | None, variance: float) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * scale


def draw_fading(budget: LinkBudget, rng: np.random.Generator) -> FadingRealization:
    var = link_variances(budget)
    draws = complex_gaussian(rng, 6, 1.0)
    return FadingRealization(
        h_sr1=complex(draws[0] * math.sqrt(var["sr"])),
        h_sr2=complex(draws[1] * math.sqrt(var["sr"])),
        h_rr=complex(draws[2] * math.sqrt(var["rr"])),
        h_sd=complex(draws[3] * math.sqrt(var["sd"])),
        h_r1d=complex(draws[4] * math.sqrt(var["rd"])),
        h_r2d=complex(draws[5] * math.sqrt(var["rd"])),
    )


def zero_frame(length: int) -> np.ndarray:
    return np.zeros(length, dtype=np.complex128)


def check_symbol_frame(frame: np.ndarray, length: int | None = None) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.complex128).reshape(-1)
    if length is not None and frame.size != length:
        raise ChannelError(f"Frame length {frame.size} does not match expected {length}")
    magnitude = np.abs(frame)
    valid = (magnitude < SYMBOL_TOLERANCE) | (np.abs(magnitude - 1.0) < SYMBOL_TOLERANCE)
    if not np.all(valid):
        raise ChannelError("Symbols must have unit energy or be exactly zero")
    return frame


def _superpose(
    x_a: np.ndarray,
    h_a: complex,
    x_b: np.ndarray,
    h_b: complex,
    tx_power: float,
    rng: np.random.Generator,
) -> np.ndarray:
    x_a = check_symbol_frame(x_a)
    x_b = check_symbol_frame(x_b, x_a.size)
    amplitude = math.sqrt(tx_power)
    noise = complex_gaussian(rng, x_a.size, 1.0)
    return amplitude * h_a * x_a + amplitude * h_b * x_b + noise


def relay_receive(
    x_src: np.ndarray,
    x_other_relay: np.ndarray,
    fading: FadingRealization,
    budget: LinkBudget,
    rng: np.random.Generator,
    *,
    relay: int,
) -> np.ndarray:
    """Source frame plus the other relay's forwarded frame, seen at `relay`."""
    return _superpose(x_src, fading.h_sr(relay), x_other_relay, fading.h_rr, budget.tx_power, rng)


def destination_receive(
    x_src: np.ndarray,
    x_relay: np.ndarray,
    fading: FadingRealization,
    budget: LinkBudget,
    rng: np.random.Generator,
    *,
    relay: int,
) -> np.ndarray:
    """Slot observation at D; pass all-zero frames for the boundary slots."""
    return _superpose(x_src, fading.h_sd, x_relay, fading.h_rd(relay), budget.tx_power, rng)


def relay_noise_variance(
    budget: LinkBudget,
    interference_energy: float = 1.0,
    h_rr: complex | None = None,
) -> float:
    """Complex interference-plus-noise variance P*|h_rr|^2*E|x|^2 + 1 at a receiving relay.

    Without `h_rr` the R->R gain is replaced by its average sigma2_RR.
    """
    gain = link_variances(budget)["rr"] if h_rr is None else abs(h_rr) ** 2
    return budget.tx_power * gain * interference_energy + 1.0
