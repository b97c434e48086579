"""Relay-side forwarding: square-deviation symbol selection and the frame-level baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modem import SIGMA2_X, to_real, to_real_matrix


POLICIES = ("symbol_selective", "crc_genie", "frame_threshold", "perfect")
SCHEME_POLICIES = {
    "proposed": "symbol_selective",
    "perfect": "perfect",
    "crc_sdf": "crc_genie",
    "threshold_sdf": "frame_threshold",
}


class SelectorError(ValueError):
    pass


@dataclass(frozen=True)
class SelectorConfig:
    epsilon: float = 1.0
    policy: str = "symbol_selective"
    tau: float = 0.1

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise SelectorError(f"Unknown forwarding policy: {self.policy!r}")
        if not self.epsilon >= 0:
            raise SelectorError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 <= self.tau <= 1.0:
            raise SelectorError(f"tau must lie in [0, 1], got {self.tau}")

    @classmethod
    def for_scheme(cls, scheme: str, epsilon: float, tau: float = 0.1) -> "SelectorConfig":
        try:
            policy = SCHEME_POLICIES[scheme]
        except KeyError as exc:
            raise SelectorError(f"Unknown scheme: {scheme!r}") from exc
        return cls(epsilon=epsilon, policy=policy, tau=tau)


def mmse_weight(h_real: np.ndarray, sigma2_x: float, sigma2_z: float | np.ndarray) -> np.ndarray:
    """W = s2x H^T [s2x H H^T + s2z I]^-1, evaluated in closed form.

    H H^T = g I for the rotation-scaled channel matrix, so the bracket is a scalar.
    Broadcasts over leading axes of `h_real` and over an array of `sigma2_z`.
    """
    sigma2_z = np.asarray(sigma2_z, dtype=np.float64)
    if sigma2_x <= 0 or np.any(sigma2_z <= 0):
        raise SelectorError("sigma2_x and sigma2_z must be positive")
    h_real = np.asarray(h_real, dtype=np.float64)
    gain = h_real[..., 0, 0] ** 2 + h_real[..., 1, 0] ** 2
    scale = sigma2_x / (sigma2_x * gain + sigma2_z)
    return scale[..., None, None] * np.swapaxes(h_real, -1, -2)


def square_deviation(weight: np.ndarray, y_real: np.ndarray, x_hat_real: np.ndarray) -> np.ndarray:
    estimate = np.einsum("...ij,...j->...i", weight, np.asarray(y_real, dtype=np.float64))
    return np.sum((estimate - np.asarray(x_hat_real, dtype=np.float64)) ** 2, axis=-1)


def symbol_deviations(
    y: np.ndarray,
    h: complex,
    tx_power: float,
    x_hat: np.ndarray,
    sigma2_z: float | np.ndarray,
    sigma2_x: float = SIGMA2_X,
) -> np.ndarray:
    """Square deviation of every symbol of a received relay frame against its re-encoded estimate."""
    weight = mmse_weight(to_real_matrix(h, tx_power), sigma2_x, sigma2_z)
    return square_deviation(weight, to_real(y), to_real(x_hat))


def select_mask(deviations: np.ndarray, config: SelectorConfig) -> np.ndarray:
    # inclusive: a symbol exactly on the threshold is forwarded
    return np.asarray(deviations, dtype=np.float64) <= config.epsilon


def build_relay_frame(x_hat: np.ndarray, mask: np.ndarray) -> np.ndarray:
    x_hat = np.asarray(x_hat, dtype=np.complex128).reshape(-1)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if x_hat.size != mask.size:
        raise SelectorError(f"Mask length {mask.size} does not match frame length {x_hat.size}")
    return np.where(mask, x_hat, 0.0 + 0.0j)


def symbol_error_fraction(true_frame: np.ndarray, frame: np.ndarray) -> float:
    true_frame = np.asarray(true_frame, dtype=np.complex128)
    frame = np.asarray(frame, dtype=np.complex128)
    if true_frame.size == 0:
        return 0.0
    return float(np.mean(np.abs(true_frame - frame) > 1e-9))


def apply_policy(
    true_bits: np.ndarray,
    decoded_bits: np.ndarray | None,
    true_frame: np.ndarray,
    reencoded_frame: np.ndarray | None,
    deviations: np.ndarray | None,
    config: SelectorConfig,
) -> np.ndarray:
    """Frame a relay transmits in the next slot under `config.policy`."""
    true_frame = np.asarray(true_frame, dtype=np.complex128).reshape(-1)
    silent = np.zeros_like(true_frame)
    if config.policy == "perfect":
        return true_frame.copy()
    if reencoded_frame is None or decoded_bits is None:
        raise SelectorError(f"Policy {config.policy} needs the decoded and re-encoded frame")
    reencoded_frame = np.asarray(reencoded_frame, dtype=np.complex128).reshape(-1)
    if reencoded_frame.size != true_frame.size:
        raise SelectorError(f"Frame length mismatch: {reencoded_frame.size} vs {true_frame.size}")
    if config.policy == "crc_genie":
        decoded_ok = np.array_equal(np.asarray(decoded_bits), np.asarray(true_bits))
        return reencoded_frame.copy() if decoded_ok else silent
    if config.policy == "frame_threshold":
        errors = symbol_error_fraction(true_frame, reencoded_frame)
        return reencoded_frame.copy() if errors < config.tau else silent
    if config.policy == "symbol_selective":
        if deviations is None:
            raise SelectorError("symbol_selective needs per-symbol deviations")
        return build_relay_frame(reencoded_frame, select_mask(deviations, config))
    raise SelectorError(f"Unknown forwarding policy: {config.policy!r}")
