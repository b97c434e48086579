from __future__ import annotations

import argparse
import sys

from .config import CommandContext, ConfigError, load_config
from .commands.dmt import dmt as dmt_command
from .commands.run import run as run_command
from .commands.theory import theory as theory_command
from .logging import log_command_finish, log_command_start, setup_logger
from .services.analysis import AnalysisError
from .services.channel import ChannelError
from .services.codec import CodecError
from .services.modem import ModemError
from .services.receiver import ReceiverError
from .services.results import ResultsError
from .services.selector import SelectorError


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

PARAMETER_ERRORS = (ConfigError, AnalysisError, ChannelError, CodecError, ModemError, ReceiverError, SelectorError)

# ---------------------------------------------------------------------------
# Reusable argument specs: (name_or_flags, kwargs_for_add_argument)
# ---------------------------------------------------------------------------
ARG_OUT = (("-o", "--out"), {"help": "输出 CSV 路径，默认写入 results 目录"})
ARG_PRESET = (("-p", "--preset"), {"choices": ("exp1", "exp2", "fig2")})
ARG_SEED = (("--seed",), {"type": int})
ARG_WORKERS = (("-w", "--workers"), {"type": int, "help": "并行进程数，结果与进程数无关"})
ARG_REALIZATIONS = (("-n", "--realizations"), {"type": int})
ARG_SCHEMES = (("-s", "--schemes"), {"help": "逗号分隔: proposed,perfect,crc_sdf,threshold_sdf"})
ARG_SNR = (("--snr",), {"help": "dB 列表 '10,12' 或闭区间 '10:2:20'"})
ARG_L = (("--L",), {"type": int, "dest": "L"})
ARG_EPS = (("--eps",), {})
ARG_ETA = (("--eta",), {})
ARG_PC = (("--pc",), {"help": "直接指定 P_C，跳过渐近计算"})
ARG_R_GRID = (("--r-grid",), {"dest": "r_grid"})
ARG_PC_MODEL = (("--pc-model",), {"dest": "pc_model", "choices": ("interference", "mixture", "interference_free")})
ARG_SIGMA2_CH = (("--sigma2-ch",), {"dest": "sigma2_ch"})
ARG_VERIFY = (("--verify",), {"action": "store_true", "help": "追加蒙特卡洛估计与绝对偏差列"})
ARG_SAMPLES = (("--samples",), {"type": int})
ARG_SYMBOL_PRIOR = (("--symbol-prior",), {"dest": "symbol_prior", "choices": ("gaussian", "qpsk")})
ARG_MANIFEST = (("-m", "--manifest"), {"help": "按已有 manifest 重新运行"})

# ---------------------------------------------------------------------------
# Command registry: (command_name, handler, [arg_specs])
# ---------------------------------------------------------------------------
COMMANDS = [
    (
        "run",
        run_command,
        [ARG_OUT, ARG_PRESET, ARG_SEED, ARG_WORKERS, ARG_REALIZATIONS, ARG_SCHEMES, ARG_SNR, ARG_L, ARG_EPS, ARG_SIGMA2_CH, ARG_MANIFEST],
    ),
    ("dmt", dmt_command, [ARG_OUT, ARG_PRESET, ARG_L, ARG_EPS, ARG_ETA, ARG_PC, ARG_R_GRID, ARG_PC_MODEL]),
    (
        "theory",
        theory_command,
        [ARG_OUT, ARG_SNR, ARG_EPS, ARG_SIGMA2_CH, ARG_L, ARG_VERIFY, ARG_SAMPLES, ARG_SEED, ARG_SYMBOL_PRIOR],
    ),
]

COMMAND_HELPS = {
    "run": "蒙特卡洛 BER 仿真（按 SNR 与方案扫描，输出 BER CSV）",
    "dmt": "计算分集-复用折中曲线（含 MISO 上界）",
    "theory": "计算中继符号选择概率的闭式结果，可选蒙特卡洛校验",
}


def main(argv: list[str] | None = None) -> int:
    if hasattr(sys.stdout, "reconfigure"):
        try:
            sys.stdout.reconfigure(line_buffering=True, encoding="utf-8")
        except Exception:
            pass

    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "handler"):
        parser.print_help()
        return EXIT_CONFIG
    command_name = args.command

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        logger = setup_logger(command_name, config.logs_dir)
    except OSError as exc:
        print(f"Cannot open log directory {config.logs_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    log_command_start(logger, command_name, config.config_path)
    logger.info("Results dir: %s", config.results_dir)

    ctx = CommandContext(config=config, command_name=command_name)

    try:
        result = args.handler(ctx, args, logger)
    except PARAMETER_ERRORS as exc:
        logger.error("参数错误: %s", exc)
        result = EXIT_CONFIG
    except (ResultsError, OSError) as exc:
        logger.error("读写失败: %s", exc)
        result = EXIT_IO
    except Exception as exc:
        logger.exception("Command failed: %s", exc)
        result = EXIT_FAILED

    log_command_finish(logger, command_name, failed=1 if result else 0)
    return int(result or EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfd")
    parser.add_argument("--config", help="Path to config YAML")
    commands = parser.add_subparsers(dest="command", help="子命令")
    for cmd_name, handler, arg_specs in COMMANDS:
        _register(commands, cmd_name, handler, arg_specs, COMMAND_HELPS.get(cmd_name, ""))
    return parser


def _register(commands, name: str, handler, arg_specs: list, help_text: str = "") -> None:
    parser = commands.add_parser(name, help=help_text)
    seen: set[str] = set()
    for flag_or_flags, kwargs in arg_specs:
        if isinstance(flag_or_flags, str):
            flags = (flag_or_flags,)
        else:
            flags = flag_or_flags
        main_flag = flags[-1]
        if main_flag in seen:
            continue
        seen.add(main_flag)
        parser.add_argument(*flags, **kwargs)
    parser.set_defaults(handler=handler)


if __name__ == "__main__":
    raise SystemExit(main())
