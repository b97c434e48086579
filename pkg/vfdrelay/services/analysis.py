"""Closed-form selection statistics and the diversity-multiplexing trade-off.

Variances are per real dimension (sigma2_x = 1/2 for unit-energy QPSK). The
relay's estimation error W*y - x is zero-mean Gaussian with covariance
sigma2_ce * I, so the square deviation is sigma2_ce times a chi-squared
variable with two degrees of freedom.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..models import DmtCurve, TheoryPoint
from .channel import complex_gaussian
from .modem import CONSTELLATION, to_complex, to_real, to_real_matrix
from .selector import SelectorConfig, select_mask, symbol_deviations


PC_MODELS = ("interference", "mixture", "interference_free")
SYMBOL_PRIORS = ("gaussian", "qpsk")
ASYMPTOTIC_SNR_DB = 60.0


class AnalysisError(ValueError):
    pass


def error_covariance_scalar(point: TheoryPoint) -> float:
    sigma2_x, sigma2_z = point.sigma2_x, point.sigma2_z
    if sigma2_x <= 0 or sigma2_z <= 0 or point.snr_sr_linear < 0:
        raise AnalysisError("error covariance needs positive variances and a non-negative SNR")
    return sigma2_x * sigma2_z / (point.snr_sr_linear * sigma2_x + sigma2_z)


def error_covariance_matrix(h_real: np.ndarray, sigma2_x: float, sigma2_z: float) -> np.ndarray:
    """Full s2x I - s2x^2 H^T [s2x H H^T + s2z I]^-1 H, by explicit inversion."""
    h_real = np.asarray(h_real, dtype=np.float64)
    bracket = sigma2_x * h_real @ h_real.T + sigma2_z * np.eye(2)
    return sigma2_x * np.eye(2) - sigma2_x**2 * h_real.T @ np.linalg.inv(bracket) @ h_real


def selection_probability(sigma2_ce: float, epsilon: float) -> float:
    if sigma2_ce <= 0:
        raise AnalysisError(f"sigma2_ce must be positive, got {sigma2_ce}")
    if epsilon < 0:
        raise AnalysisError(f"epsilon must be >= 0, got {epsilon}")
    if math.isinf(epsilon):
        return 1.0
    return -math.expm1(-epsilon / (2.0 * sigma2_ce))


def point_selection_probability(point: TheoryPoint) -> float:
    return selection_probability(error_covariance_scalar(point), point.epsilon)


def mixture_selection_probability(point: TheoryPoint, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Selection probability when the interfering symbol is itself punctured with probability 1 - P_C.

    A punctured interferer leaves only thermal noise, so P_C solves
    P_C = P_C * P_int + (1 - P_C) * P_free; iterated from P_int.
    """
    p_int = point_selection_probability(point.interference_state())
    p_free = point_selection_probability(point.interference_free())
    p_c = p_int
    for _ in range(max_iter):
        updated = p_c * p_int + (1.0 - p_c) * p_free
        if abs(updated - p_c) < tol:
            return updated
        p_c = updated
    return p_c


def average_selection_probability(points: TheoryPoint | Iterable[TheoryPoint], *, mixture: bool = True) -> float:
    """Mean selection probability over a grid of (frame, symbol) operating points."""
    if isinstance(points, TheoryPoint):
        points = [points]
    values = [
        mixture_selection_probability(point) if mixture else point_selection_probability(point)
        for point in points
    ]
    if not values:
        raise AnalysisError("average_selection_probability needs at least one point")
    return float(np.mean(values))


def superframe_points(point: TheoryPoint) -> list[TheoryPoint]:
    """One point per frame: frame 1 is received while no relay transmits."""
    clean = point.interference_free()
    return [clean] + [point] * (point.L - 1)


def superframe_selection_probability(point: TheoryPoint) -> float:
    clean, *rest = superframe_points(point)
    values = [point_selection_probability(clean)] + [mixture_selection_probability(p) for p in rest]
    return float(np.mean(values))


def asymptotic_pc(eta: float, epsilon: float, *, model: str = "interference", snr_db: float = ASYMPTOTIC_SNR_DB) -> float:
    if model not in PC_MODELS:
        raise AnalysisError(f"Unknown P_C model {model!r}; expected one of {list(PC_MODELS)}")
    if eta <= 0:
        raise AnalysisError(f"eta must be positive, got {eta}")
    point = TheoryPoint(snr_sr_linear=10.0 ** (snr_db / 10.0), epsilon=epsilon, eta=eta)
    if model == "interference":
        return point_selection_probability(point.interference_state())
    if model == "interference_free":
        return point_selection_probability(point.interference_free())
    return mixture_selection_probability(point)


def dmt_curve(L: int, p_c: float, r_grid: Sequence[float], *, name: str = "proposed", eta: float | None = None) -> DmtCurve:
    if L < 2 or L % 2:
        raise AnalysisError(f"L must be even and >= 2, got {L}")
    if not 0.0 < p_c <= 1.0:
        raise AnalysisError(f"P_C must lie in (0, 1], got {p_c}")
    r = np.asarray(list(r_grid), dtype=np.float64)
    if r.size == 0 or np.any(r < 0) or np.any(r > 1):
        raise AnalysisError("r grid must be non-empty and inside [0, 1]")
    slope = (L + 1) / L
    d = np.maximum(0.0, 1.0 - slope * r) + np.maximum(0.0, 1.0 - slope * r / p_c)
    return DmtCurve(name=name, L=L, p_c=p_c, r=r.tolist(), d=d.tolist(), eta=eta)


def miso_bound(L: int, r_grid: Sequence[float]) -> DmtCurve:
    return dmt_curve(L, 1.0, r_grid, name="miso_bound")


def _draw_symbols(point: TheoryPoint, samples: int, rng: np.random.Generator, symbol_prior: str) -> np.ndarray:
    if symbol_prior not in SYMBOL_PRIORS:
        raise AnalysisError(f"Unknown symbol prior {symbol_prior!r}")
    if samples < 1:
        raise AnalysisError("samples must be positive")
    if symbol_prior == "gaussian":
        return complex_gaussian(rng, samples, 2.0 * point.sigma2_x)
    return CONSTELLATION[rng.integers(0, CONSTELLATION.size, samples)]


def _observe(h: np.ndarray, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """y = H x + z on real pairs, returned as complex samples."""
    return to_complex(np.einsum("...ij,...j->...i", to_real_matrix(h), to_real(x)) + to_real(z))


def selection_probability_mc(
    point: TheoryPoint,
    samples: int,
    rng: np.random.Generator,
    *,
    symbol_prior: str = "qpsk",
) -> float:
    """Empirical selection rate of the relay selector at `point`.

    The S->R gain is held at its average (random phase) and the R->R coefficient
    is redrawn per symbol, which makes the interference exactly CN(0, P*sigma2_RR).
    The relay's estimate is the true symbol. The closed form assumes Gaussian
    symbols; with the QPSK symbols the relay really sends the rate drifts from it
    when the MMSE weight shrinks hard (low SNR, strong interference).
    """
    x = _draw_symbols(point, samples, rng, symbol_prior)
    h = math.sqrt(point.snr_sr_linear) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, samples))
    interferer = CONSTELLATION[rng.integers(0, CONSTELLATION.size, samples)]
    # sigma2_z beyond the thermal part is carried by the interferer through h_rr
    h_rr = complex_gaussian(rng, samples, 2.0 * max(point.sigma2_z - point.sigma2_noise, 0.0))
    z = h_rr * interferer + complex_gaussian(rng, samples, 2.0 * point.sigma2_noise)
    deviations = symbol_deviations(_observe(h, x, z), h, 1.0, x, point.sigma2_z, point.sigma2_x)
    mask = select_mask(deviations, SelectorConfig(epsilon=point.epsilon))
    return float(np.mean(mask))


def normalized_deviations(point: TheoryPoint, samples: int, rng: np.random.Generator, *, symbol_prior: str = "qpsk") -> np.ndarray:
    """Delta / sigma2_ce under the true-symbol hypothesis, for distribution checks."""
    x = _draw_symbols(point, samples, rng, symbol_prior)
    h = math.sqrt(point.snr_sr_linear) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, samples))
    z = complex_gaussian(rng, samples, 2.0 * point.sigma2_z)
    deviations = symbol_deviations(_observe(h, x, z), h, 1.0, x, point.sigma2_z, point.sigma2_x)
    return deviations / error_covariance_scalar(point)




def theory_row(snr_db: float, epsilon: float, sigma2_ch: float, L: int = 20) -> dict[str, float]:
    """Closed-form row at S->R SNR `snr_db`; p_c averages the L frames of a superframe."""
    base = TheoryPoint.from_link(snr_db, epsilon, sigma2_ch, L, interference=False)
    sigma2_ce = error_covariance_scalar(base.interference_state())
    return {
        "snr_db": float(snr_db),
        "epsilon": float(epsilon),
        "sigma2_ch": float(sigma2_ch),
        "sigma2_ce": sigma2_ce,
        "p_m": selection_probability(sigma2_ce, epsilon),
        "p_c": superframe_selection_probability(base),
    }


def theory_sweep(
    snr_points_db: Sequence[float],
    epsilons: Sequence[float],
    sigma2_chs: Sequence[float],
    L: int = 20,
    *,
    verify_samples: int = 0,
    seed: int = 0,
    symbol_prior: str = "qpsk",
) -> list[dict[str, float]]:
    """Grid over (sigma2_ch, epsilon, snr); with `verify_samples` each row gets a Monte-Carlo p_m."""
    rows = []
    for sigma2_ch in sigma2_chs:
        for epsilon in epsilons:
            for snr_db in snr_points_db:
                row = theory_row(snr_db, epsilon, sigma2_ch, L)
                if verify_samples:
                    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(len(rows),)))
                    state = TheoryPoint.from_link(snr_db, epsilon, sigma2_ch, L)
                    estimate = selection_probability_mc(state, verify_samples, rng, symbol_prior=symbol_prior)
                    row["p_m_mc"] = estimate
                    row["abs_dev"] = abs(estimate - row["p_m"])
                rows.append(row)
    return rows
