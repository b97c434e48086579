from __future__ import annotations

import logging

from .. import __version__
from ..config import CommandContext, ConfigError
from ..models import RunManifest, now_iso, parse_number_list
from ..services.analysis import asymptotic_pc, dmt_curve, miso_bound
from ..services.results import write_dmt_csv, write_manifest


DEFAULT_OUTPUT = "dmt.csv"
DMT_KEYS = ("L", "epsilon", "eta", "pc", "r_grid", "pc_model")
DMT_DEFAULTS = {"L": 20, "epsilon": 0.5, "eta": [1.0], "r_grid": "0:0.01:1", "pc_model": "interference"}
PRESETS = {"fig2": {"L": 20, "epsilon": 0.5, "eta": [1.0, 1.25]}}


def dmt(ctx: CommandContext, args, logger: logging.Logger) -> int:
    arg_values = {
        "L": getattr(args, "L", None),
        "epsilon": getattr(args, "eps", None),
        "eta": getattr(args, "eta", None),
        "pc": getattr(args, "pc", None),
        "r_grid": getattr(args, "r_grid", None),
        "pc_model": getattr(args, "pc_model", None),
    }
    values = {**DMT_DEFAULTS, **ctx.layered("dmt", DMT_KEYS, {})}
    preset = getattr(args, "preset", None)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"Unknown dmt preset {preset!r}; expected one of {list(PRESETS)}")
        values.update(PRESETS[preset])
    values.update({key: value for key, value in arg_values.items() if value is not None})

    try:
        L = int(values["L"])
        epsilon = float(values["epsilon"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid dmt value: {exc}") from exc
    r_grid = parse_number_list(values["r_grid"], "r_grid")
    model = str(values["pc_model"])

    curves = []
    if values.get("pc") is not None:
        for p_c in parse_number_list(values["pc"], "pc"):
            if p_c == 1.0:
                continue
            curves.append(dmt_curve(L, p_c, r_grid, name=f"pc={p_c:g}"))
    else:
        for eta in parse_number_list(values["eta"], "eta"):
            p_c = asymptotic_pc(eta, epsilon, model=model)
            curve = dmt_curve(L, p_c, r_grid, name="proposed", eta=eta)
            logger.info("DMT 曲线: eta=%s P_C=%.4f 转折点=%s", eta, p_c, [round(r, 4) for r in curve.zero_crossings()])
            curves.append(curve)
    curves.append(miso_bound(L, r_grid))

    out_path = ctx.output_path(getattr(args, "out", None), DEFAULT_OUTPUT)
    csv_path = write_dmt_csv(curves, out_path)
    manifest = RunManifest(
        command="dmt",
        tool_version=__version__,
        created_at=now_iso(),
        config={"preset": preset, "L": L, "epsilon": epsilon, "r_grid": r_grid, "pc_model": model, "eta": values.get("eta"), "pc": values.get("pc")},
        outputs={"csv": str(csv_path)},
        stats={curve.name if curve.eta is None else f"{curve.name}@eta={curve.eta:g}": curve.p_c for curve in curves},
    )
    write_manifest(manifest, csv_path)
    logger.info("已写出 DMT 曲线: %s (%s 条)", csv_path, len(curves))
    return 0
