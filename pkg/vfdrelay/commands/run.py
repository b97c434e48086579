from __future__ import annotations

import logging
from pathlib import Path

from .. import __version__
from ..config import CommandContext, ConfigError
from ..models import RunManifest, SimConfig, now_iso
from ..paths import resolve_path
from ..services.engine import expand_preset, run_sweep
from ..services.results import write_ber_csv, write_manifest


DEFAULT_OUTPUT = "ber.csv"


def run(ctx: CommandContext, args, logger: logging.Logger) -> int:
    if getattr(args, "manifest", None):
        configs, preset, default_out = _configs_from_manifest(Path(args.manifest), logger)
    else:
        base = SimConfig.from_dict(ctx.layered("simulation", SimConfig.field_names(), _arg_values(args)))
        preset = getattr(args, "preset", None)
        configs = expand_preset(preset, base) if preset else [base]
        default_out = None

    out_path = ctx.output_path(args.out or default_out, DEFAULT_OUTPUT)
    workers = args.workers or configs[0].workers
    logger.info("BER 仿真: 配置数=%s workers=%s 输出=%s", len(configs), workers, out_path)

    records = []
    stats = {}
    for config in configs:
        logger.info(
            "开始扫描: label=%s eps=%s sigma2_ch=%s L=%s realizations=%s snr=%s",
            config.label or "-",
            config.epsilon,
            config.sigma2_ch,
            config.L,
            config.realizations,
            config.snr_points_db,
        )
        result = run_sweep(config, workers=workers, logger=logger)
        records.extend(result.records)
        stats.update(result.stats)

    csv_path = write_ber_csv(records, out_path)
    manifest = RunManifest(
        command="run",
        tool_version=__version__,
        created_at=now_iso(),
        config={"preset": preset, "variants": [config.to_dict() for config in configs]},
        outputs={"csv": str(csv_path)},
        stats=stats,
    )
    manifest_file = write_manifest(manifest, csv_path)
    logger.info("已写出结果: %s (%s 行), manifest: %s", csv_path, len(records), manifest_file)
    return 0


def _arg_values(args) -> dict:
    return {
        "L": getattr(args, "L", None),
        "epsilon": getattr(args, "eps", None),
        "sigma2_ch": getattr(args, "sigma2_ch", None),
        "snr_points_db": getattr(args, "snr", None),
        "schemes": getattr(args, "schemes", None),
        "realizations": getattr(args, "realizations", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
    }


def _configs_from_manifest(path: Path, logger: logging.Logger) -> tuple[list[SimConfig], str | None, str | None]:
    manifest = RunManifest.from_file(resolve_path(path, Path.cwd()))
    if manifest.command != "run":
        raise ConfigError(f"Manifest {path} was written by '{manifest.command}', not 'run'")
    variants = manifest.config.get("variants") or []
    if not variants:
        raise ConfigError(f"Manifest {path} holds no simulation variants")
    configs = [SimConfig.from_dict(variant) for variant in variants]
    logger.info("从 manifest 重放: %s (版本 %s, 创建于 %s)", path, manifest.tool_version, manifest.created_at)
    return configs, manifest.config.get("preset"), manifest.outputs.get("csv")
