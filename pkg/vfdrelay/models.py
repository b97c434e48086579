from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .config import ConfigError


SCHEMES = ("proposed", "perfect", "crc_sdf", "threshold_sdf")
P_ZERO_MODES = ("analytic", "uniform")


def now_iso() -> str:
    return datetime.now(timezone.utc).astimezone().isoformat(timespec="seconds")


def parse_number_list(value: Any, name: str) -> list[float]:
    """Accept `[1, 2]`, `"1,2"`, `"10:2:20"` (inclusive range) or a single number."""
    if value is None:
        raise ConfigError(f"{name}: missing value")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        try:
            return [float(item) for item in value]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: not a number list: {value!r}") from exc
    text = str(value).strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, step, stop = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"{name}: invalid range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: not a number list: {text!r}") from exc


def parse_name_list(value: Any) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(item).strip() for item in value if str(item).strip()]
    return [part.strip() for part in str(value).split(",") if part.strip()]


@dataclass
class SimConfig:
    L: int = 20
    info_bits: int = 512
    epsilon: float = 1.0
    sigma2_ch: float = 1.0
    snr_points_db: list[float] = field(default_factory=lambda: [4.0, 8.0, 12.0, 16.0, 20.0])
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    realizations: int = 100
    seed: int = 20190601
    decoder_iterations: int = 8
    doping_rate: int = 2
    interleaver_seed: int = 1
    offset_sr_db: float = 10.6
    offset_rd_db: float = 4.4
    frame_threshold: float = 0.1
    p_zero_mode: str = "analytic"
    genie_noise: bool = False
    workers: int = 1
    label: str = ""

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(item.name for item in fields(cls))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise ConfigError(f"Unknown simulation field(s): {', '.join(unknown)}")
        defaults = cls()
        try:
            config = cls(
                L=int(data.get("L", defaults.L)),
                info_bits=int(data.get("info_bits", defaults.info_bits)),
                epsilon=float(data.get("epsilon", defaults.epsilon)),
                sigma2_ch=float(data.get("sigma2_ch", defaults.sigma2_ch)),
                snr_points_db=parse_number_list(data.get("snr_points_db", defaults.snr_points_db), "snr_points_db"),
                schemes=parse_name_list(data.get("schemes", defaults.schemes)),
                realizations=int(data.get("realizations", defaults.realizations)),
                seed=int(data.get("seed", defaults.seed)),
                decoder_iterations=int(data.get("decoder_iterations", defaults.decoder_iterations)),
                doping_rate=int(data.get("doping_rate", defaults.doping_rate)),
                interleaver_seed=int(data.get("interleaver_seed", defaults.interleaver_seed)),
                offset_sr_db=float(data.get("offset_sr_db", defaults.offset_sr_db)),
                offset_rd_db=float(data.get("offset_rd_db", defaults.offset_rd_db)),
                frame_threshold=float(data.get("frame_threshold", defaults.frame_threshold)),
                p_zero_mode=str(data.get("p_zero_mode", defaults.p_zero_mode)),
                genie_noise=bool(data.get("genie_noise", defaults.genie_noise)),
                workers=int(data.get("workers", defaults.workers)),
                label=str(data.get("label", defaults.label) or ""),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid simulation value: {exc}") from exc
        config.validate()
        return config

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **changes: Any) -> "SimConfig":
        updated = replace(self, **changes)
        updated.validate()
        return updated

    def validate(self) -> None:
        if self.L < 2 or self.L % 2:
            raise ConfigError(f"L: must be an even integer >= 2, got {self.L}")
        if self.info_bits < 1:
            raise ConfigError(f"info_bits: must be positive, got {self.info_bits}")
        if self.epsilon < 0 or math.isnan(self.epsilon):
            raise ConfigError(f"epsilon: must be >= 0, got {self.epsilon}")
        if self.sigma2_ch < 0 or math.isnan(self.sigma2_ch):
            raise ConfigError(f"sigma2_ch: must be >= 0, got {self.sigma2_ch}")
        if not self.snr_points_db:
            raise ConfigError("snr_points_db: must not be empty")
        if not all(math.isfinite(point) for point in self.snr_points_db):
            raise ConfigError(f"snr_points_db: values must be finite, got {self.snr_points_db}")
        unknown = [scheme for scheme in self.schemes if scheme not in SCHEMES]
        if unknown:
            raise ConfigError(f"schemes: unknown scheme(s) {unknown}; expected a subset of {list(SCHEMES)}")
        if self.realizations < 1:
            raise ConfigError(f"realizations: must be >= 1, got {self.realizations}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must fit in 64 bits, got {self.seed}")
        if self.decoder_iterations < 1:
            raise ConfigError(f"decoder_iterations: must be >= 1, got {self.decoder_iterations}")
        if self.doping_rate < 1:
            raise ConfigError(f"doping_rate: must be >= 1, got {self.doping_rate}")
        if not 0.0 <= self.frame_threshold <= 1.0:
            raise ConfigError(f"frame_threshold: must lie in [0, 1], got {self.frame_threshold}")
        if self.p_zero_mode not in P_ZERO_MODES:
            raise ConfigError(f"p_zero_mode: expected one of {list(P_ZERO_MODES)}, got {self.p_zero_mode!r}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")

    def scheme_label(self, scheme: str) -> str:
        return f"{scheme}@{self.label}" if self.label else scheme


@dataclass
class BerRecord:
    scheme: str
    snr_db: float
    bit_errors: int = 0
    bits_total: int = 0
    frame_errors: int = 0
    frames_total: int = 0
    realizations: int = 0
    seed: int = 0

    CSV_COLUMNS = ("scheme", "snr_db", "ber", "bit_errors", "bits_total", "frame_errors", "frames_total", "seed")

    @property
    def ber(self) -> float:
        if self.bits_total == 0:
            return 0.0
        return self.bit_errors / self.bits_total

    def add_frames(self, frame_bit_errors: list[int], info_bits: int) -> None:
        self.bit_errors += int(sum(frame_bit_errors))
        self.bits_total += len(frame_bit_errors) * info_bits
        self.frame_errors += sum(1 for errors in frame_bit_errors if errors > 0)
        self.frames_total += len(frame_bit_errors)
        self.realizations += 1

    def merge(self, other: "BerRecord") -> "BerRecord":
        if (self.scheme, self.snr_db, self.seed) != (other.scheme, other.snr_db, other.seed):
            raise ValueError(f"Cannot merge records for {self.scheme}@{self.snr_db} and {other.scheme}@{other.snr_db}")
        return BerRecord(
            scheme=self.scheme,
            snr_db=self.snr_db,
            bit_errors=self.bit_errors + other.bit_errors,
            bits_total=self.bits_total + other.bits_total,
            frame_errors=self.frame_errors + other.frame_errors,
            frames_total=self.frames_total + other.frames_total,
            realizations=self.realizations + other.realizations,
            seed=self.seed,
        )

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        """Normal-approximation confidence interval on the BER."""
        if self.bits_total == 0:
            return 0.0, 1.0
        p = self.ber
        half = z * math.sqrt(max(p * (1.0 - p), 0.0) / self.bits_total)
        return max(0.0, p - half), min(1.0, p + half)

    def to_row(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme,
            "snr_db": float(self.snr_db),
            "ber": float(self.ber),
            "bit_errors": self.bit_errors,
            "bits_total": self.bits_total,
            "frame_errors": self.frame_errors,
            "frames_total": self.frames_total,
            "seed": self.seed,
        }

    @classmethod
    def from_row(cls, row: dict[str, Any], realizations: int = 0) -> "BerRecord":
        return cls(
            scheme=row["scheme"],
            snr_db=float(row["snr_db"]),
            bit_errors=int(row["bit_errors"]),
            bits_total=int(row["bits_total"]),
            frame_errors=int(row["frame_errors"]),
            frames_total=int(row["frames_total"]),
            realizations=realizations,
            seed=int(row["seed"]),
        )


@dataclass(frozen=True)
class TheoryPoint:
    """Operating point of the selection-probability analysis; variances are per real dimension."""

    snr_sr_linear: float
    epsilon: float
    eta: float = 1.0
    L: int = 20
    sigma2_x: float = 0.5
    sigma2_z: float = 0.5
    sigma2_noise: float = 0.5

    def __post_init__(self) -> None:
        self.validate()

    @classmethod
    def from_link(
        cls,
        snr_sr_db: float,
        epsilon: float,
        sigma2_ch: float,
        L: int = 20,
        *,
        interference: bool = True,
    ) -> "TheoryPoint":
        snr_sr = 10.0 ** (snr_sr_db / 10.0)
        eta = math.inf if sigma2_ch == 0 else 1.0 / sigma2_ch
        point = cls(snr_sr_linear=snr_sr, epsilon=epsilon, eta=eta, L=L)
        return point.interference_state() if interference else point

    def interference_state(self) -> "TheoryPoint":
        # the interfering relay symbol has energy 2*sigma2_x
        interference = 0.0 if math.isinf(self.eta) else self.snr_sr_linear / self.eta * self.sigma2_x
        return replace(self, sigma2_z=self.sigma2_noise + interference)

    def interference_free(self) -> "TheoryPoint":
        return replace(self, sigma2_z=self.sigma2_noise)

    def validate(self) -> None:
        if self.sigma2_x <= 0 or self.sigma2_z <= 0 or self.sigma2_noise <= 0:
            raise ConfigError("TheoryPoint variances must be positive")
        if self.snr_sr_linear < 0 or self.epsilon < 0:
            raise ConfigError("TheoryPoint snr_sr_linear and epsilon must be non-negative")
        if self.eta <= 0:
            raise ConfigError(f"TheoryPoint eta must be positive, got {self.eta}")
        if self.L < 2 or self.L % 2:
            raise ConfigError(f"TheoryPoint L must be even and >= 2, got {self.L}")


@dataclass
class DmtCurve:
    name: str
    L: int
    p_c: float
    r: list[float]
    d: list[float]
    eta: float | None = None

    def zero_crossings(self) -> list[float]:
        """Multiplexing gains where each of the two terms reaches zero."""
        first = self.L / (self.L + 1)
        return [first, first * self.p_c]


@dataclass
class RunManifest:
    command: str
    tool_version: str
    created_at: str
    config: dict[str, Any]
    outputs: dict[str, str] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunManifest":
        try:
            return cls(
                command=str(data["command"]),
                tool_version=str(data.get("tool_version", "")),
                created_at=str(data.get("created_at") or now_iso()),
                config=dict(data.get("config") or {}),
                outputs={str(k): str(v) for k, v in (data.get("outputs") or {}).items()},
                stats=dict(data.get("stats") or {}),
            )
        except KeyError as exc:
            raise ConfigError(f"Manifest is missing field {exc}") from exc

    @classmethod
    def from_file(cls, path: Path) -> "RunManifest":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Invalid manifest {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def write_json(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
