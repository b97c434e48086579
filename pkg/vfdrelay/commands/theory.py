from __future__ import annotations

import logging

from .. import __version__
from ..config import CommandContext, ConfigError
from ..models import RunManifest, now_iso, parse_number_list
from ..services.analysis import SYMBOL_PRIORS, theory_sweep
from ..services.results import write_manifest, write_theory_csv


DEFAULT_OUTPUT = "theory.csv"
THEORY_KEYS = ("snr_points_db", "epsilon", "sigma2_ch", "L", "samples", "seed", "symbol_prior")
THEORY_DEFAULTS = {
    "snr_points_db": "0:5:30",
    "epsilon": [0.5, 1.0],
    "sigma2_ch": [1.0, 0.01, 0.0],
    "L": 20,
    "samples": 100_000,
    "seed": 20190601,
    "symbol_prior": "qpsk",
}


def theory(ctx: CommandContext, args, logger: logging.Logger) -> int:
    arg_values = {
        "snr_points_db": getattr(args, "snr", None),
        "epsilon": getattr(args, "eps", None),
        "sigma2_ch": getattr(args, "sigma2_ch", None),
        "L": getattr(args, "L", None),
        "samples": getattr(args, "samples", None),
        "seed": getattr(args, "seed", None),
        "symbol_prior": getattr(args, "symbol_prior", None),
    }
    values = {**THEORY_DEFAULTS, **ctx.layered("theory", THEORY_KEYS, arg_values)}
    snr_points = parse_number_list(values["snr_points_db"], "snr_points_db")
    epsilons = parse_number_list(values["epsilon"], "epsilon")
    sigma2_chs = parse_number_list(values["sigma2_ch"], "sigma2_ch")
    if not snr_points or not epsilons or not sigma2_chs:
        raise ConfigError("theory sweep needs at least one SNR, epsilon and sigma2_ch value")
    if any(value < 0 for value in epsilons + sigma2_chs):
        raise ConfigError("epsilon and sigma2_ch values must be >= 0")
    symbol_prior = str(values["symbol_prior"])
    if symbol_prior not in SYMBOL_PRIORS:
        raise ConfigError(f"symbol_prior: expected one of {list(SYMBOL_PRIORS)}, got {symbol_prior!r}")
    try:
        L = int(values["L"])
        samples = int(values["samples"])
        seed = int(values["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid theory value: {exc}") from exc
    verify = bool(getattr(args, "verify", False))

    rows = theory_sweep(
        snr_points,
        epsilons,
        sigma2_chs,
        L,
        verify_samples=samples if verify else 0,
        seed=seed,
        symbol_prior=symbol_prior,
    )
    if verify:
        worst = max(rows, key=lambda row: row["abs_dev"])
        logger.info(
            "蒙特卡洛校验: 样本数=%s 最大偏差=%.4f (snr=%s eps=%s sigma2_ch=%s)",
            samples,
            worst["abs_dev"],
            worst["snr_db"],
            worst["epsilon"],
            worst["sigma2_ch"],
        )

    out_path = ctx.output_path(getattr(args, "out", None), DEFAULT_OUTPUT)
    csv_path = write_theory_csv(rows, out_path, verify=verify)
    manifest = RunManifest(
        command="theory",
        tool_version=__version__,
        created_at=now_iso(),
        config={
            "snr_points_db": snr_points,
            "epsilon": epsilons,
            "sigma2_ch": sigma2_chs,
            "L": L,
            "verify": verify,
            "samples": samples,
            "seed": seed,
            "symbol_prior": symbol_prior,
        },
        outputs={"csv": str(csv_path)},
    )
    write_manifest(manifest, csv_path)
    logger.info("已写出选择概率表: %s (%s 行)", csv_path, len(rows))
    return 0
