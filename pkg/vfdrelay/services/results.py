"""CSV and manifest output for the `run`, `dmt` and `theory` commands."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable

import pandas as pd

from ..models import BerRecord, DmtCurve, RunManifest
from ..paths import sibling_path


BER_COLUMNS = BerRecord.CSV_COLUMNS
DMT_COLUMNS = ("curve", "eta", "r", "d")
THEORY_COLUMNS = ("snr_db", "epsilon", "sigma2_ch", "sigma2_ce", "p_m", "p_c")
THEORY_VERIFY_COLUMNS = THEORY_COLUMNS + ("p_m_mc", "abs_dev")
MANIFEST_SUFFIX = ".manifest.json"
FLOAT_FORMAT = "%.12g"


class ResultsError(RuntimeError):
    pass


def _write_frame(rows: list[dict[str, Any]], columns: tuple[str, ...], path: Path) -> Path:
    frame = pd.DataFrame(rows, columns=list(columns))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise ResultsError(f"Cannot write {path}: {exc}") from exc
    return path


def _read_frame(path: Path, expected: Iterable[tuple[str, ...]]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ResultsError(f"Cannot read {path}: {exc}") from exc
    columns = tuple(frame.columns)
    if columns not in tuple(expected):
        raise ResultsError(f"Unexpected columns in {path}: {list(columns)}")
    return frame


def write_ber_csv(records: Iterable[BerRecord], path: Path) -> Path:
    return _write_frame([record.to_row() for record in records], BER_COLUMNS, path)


def read_ber_csv(path: Path) -> list[BerRecord]:
    frame = _read_frame(path, [BER_COLUMNS])
    return [BerRecord.from_row(row) for row in frame.to_dict(orient="records")]


def dmt_rows(curves: Iterable[DmtCurve]) -> list[dict[str, Any]]:
    rows = []
    for curve in curves:
        for r, d in zip(curve.r, curve.d):
            rows.append({"curve": curve.name, "eta": curve.eta, "r": r, "d": d})
    return rows


def write_dmt_csv(curves: Iterable[DmtCurve], path: Path) -> Path:
    return _write_frame(dmt_rows(curves), DMT_COLUMNS, path)


def read_dmt_csv(path: Path) -> pd.DataFrame:
    return _read_frame(path, [DMT_COLUMNS])


def write_theory_csv(rows: list[dict[str, Any]], path: Path, *, verify: bool = False) -> Path:
    columns = THEORY_VERIFY_COLUMNS if verify else THEORY_COLUMNS
    return _write_frame(rows, columns, path)


def read_theory_csv(path: Path) -> pd.DataFrame:
    return _read_frame(path, [THEORY_COLUMNS, THEORY_VERIFY_COLUMNS])


def manifest_path(csv_path: Path) -> Path:
    return sibling_path(csv_path, MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, csv_path: Path) -> Path:
    target = manifest_path(csv_path)
    try:
        manifest.write_json(target)
    except OSError as exc:
        raise ResultsError(f"Cannot write {target}: {exc}") from exc
    return target
