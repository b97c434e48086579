"""Log-MAP (BCJR) recursions for the two 2-state trellises of the SCCC.

All LLRs follow the convention LLR > 0 => bit 0. Metrics are kept in the log
domain with the exact Jacobian correction.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


NEG_INF = -1.0e30
LLR_CLIP = 50.0


@njit(cache=True)
def max_star(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b <= NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


@njit(cache=True)
def _half_metric(bit: int, llr: float) -> float:
    return 0.5 * llr if bit == 0 else -0.5 * llr


@njit(cache=True)
def _clip(value: float) -> float:
    if value > LLR_CLIP:
        return LLR_CLIP
    if value < -LLR_CLIP:
        return -LLR_CLIP
    return value


@njit(cache=True)
def accumulator_siso(channel_llrs: np.ndarray, apriori_llrs: np.ndarray, doping_rate: int) -> np.ndarray:
    """Extrinsic LLRs on the accumulator inputs c_k.

    State is a_{k-1}; input c_k moves it to a_k = a_{k-1} ^ c_k. Every
    doping_rate-th output is c_k itself, the others are a_k. The start state is
    0 and the end is left open.
    """
    n = channel_llrs.shape[0]
    alpha = np.full((n + 1, 2), NEG_INF)
    beta = np.full((n + 1, 2), NEG_INF)
    alpha[0, 0] = 0.0
    beta[n, 0] = 0.0
    beta[n, 1] = 0.0

    for k in range(n):
        doped = (k + 1) % doping_rate == 0
        for s in range(2):
            if alpha[k, s] <= NEG_INF:
                continue
            for c in range(2):
                a = s ^ c
                d = c if doped else a
                gamma = _half_metric(c, apriori_llrs[k]) + _half_metric(d, channel_llrs[k])
                alpha[k + 1, a] = max_star(alpha[k + 1, a], alpha[k, s] + gamma)
        norm = max(alpha[k + 1, 0], alpha[k + 1, 1])
        alpha[k + 1, 0] -= norm
        alpha[k + 1, 1] -= norm

    for k in range(n - 1, -1, -1):
        doped = (k + 1) % doping_rate == 0
        for s in range(2):
            acc = NEG_INF
            for c in range(2):
                a = s ^ c
                d = c if doped else a
                gamma = _half_metric(c, apriori_llrs[k]) + _half_metric(d, channel_llrs[k])
                acc = max_star(acc, gamma + beta[k + 1, a])
            beta[k, s] = acc
        norm = max(beta[k, 0], beta[k, 1])
        beta[k, 0] -= norm
        beta[k, 1] -= norm

    extrinsic = np.empty(n)
    for k in range(n):
        doped = (k + 1) % doping_rate == 0
        zero = NEG_INF
        one = NEG_INF
        for s in range(2):
            for c in range(2):
                a = s ^ c
                d = c if doped else a
                gamma = _half_metric(c, apriori_llrs[k]) + _half_metric(d, channel_llrs[k])
                metric = alpha[k, s] + gamma + beta[k + 1, a]
                if c == 0:
                    zero = max_star(zero, metric)
                else:
                    one = max_star(one, metric)
        extrinsic[k] = _clip(zero - one - apriori_llrs[k])
    return extrinsic


@njit(cache=True)
def outer_siso(coded_apriori: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SISO for the memory-1 code G = (3, 2)_8 terminated in state 0.

    State is u_{k-1}; outputs are (u_k ^ u_{k-1}, u_k). The last input is the
    known termination zero. Returns (extrinsic coded LLRs, a-posteriori LLRs of
    every input including the termination bit).
    """
    steps = coded_apriori.shape[0] // 2
    alpha = np.full((steps + 1, 2), NEG_INF)
    beta = np.full((steps + 1, 2), NEG_INF)
    alpha[0, 0] = 0.0
    beta[steps, 0] = 0.0

    for k in range(steps):
        last = k == steps - 1
        for s in range(2):
            if alpha[k, s] <= NEG_INF:
                continue
            for u in range(2):
                if last and u == 1:
                    continue
                gamma = _half_metric(u ^ s, coded_apriori[2 * k]) + _half_metric(u, coded_apriori[2 * k + 1])
                alpha[k + 1, u] = max_star(alpha[k + 1, u], alpha[k, s] + gamma)
        norm = max(alpha[k + 1, 0], alpha[k + 1, 1])
        alpha[k + 1, 0] -= norm
        alpha[k + 1, 1] -= norm

    for k in range(steps - 1, -1, -1):
        last = k == steps - 1
        for s in range(2):
            acc = NEG_INF
            for u in range(2):
                if last and u == 1:
                    continue
                gamma = _half_metric(u ^ s, coded_apriori[2 * k]) + _half_metric(u, coded_apriori[2 * k + 1])
                acc = max_star(acc, gamma + beta[k + 1, u])
            beta[k, s] = acc
        norm = max(beta[k, 0], beta[k, 1])
        beta[k, 0] -= norm
        beta[k, 1] -= norm

    coded_extrinsic = np.empty(2 * steps)
    info_posterior = np.empty(steps)
    for k in range(steps):
        last = k == steps - 1
        info = np.full(2, NEG_INF)
        first = np.full(2, NEG_INF)
        second = np.full(2, NEG_INF)
        for s in range(2):
            for u in range(2):
                if last and u == 1:
                    continue
                out0 = u ^ s
                gamma = _half_metric(out0, coded_apriori[2 * k]) + _half_metric(u, coded_apriori[2 * k + 1])
                metric = alpha[k, s] + gamma + beta[k + 1, u]
                info[u] = max_star(info[u], metric)
                first[out0] = max_star(first[out0], metric)
                second[u] = max_star(second[u], metric)
        info_posterior[k] = _clip(info[0] - info[1])
        coded_extrinsic[2 * k] = _clip(first[0] - first[1] - coded_apriori[2 * k])
        coded_extrinsic[2 * k + 1] = _clip(second[0] - second[1] - coded_apriori[2 * k + 1])
    return coded_extrinsic, info_posterior
