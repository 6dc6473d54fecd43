"""CSV/JSON readers and writers for signals, datasets and decompositions."""
from __future__ import annotations

import csv
import json
import os
import re
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .deconv import DriverEvent
from .errors import DataError
from .preprocess import Signal
from .simulator import GroundTruth

SCHEMA_VERSION = 1
JITTER_LIMIT = 0.01
SEGMENT_RE = re.compile(r"^segment_(\d+)\.csv$")
DECOMP_RE = re.compile(r"^segment_(\d+)_(clean|snr[0-9.]+)\.json$")


def fmt(x: float) -> str:
    # shortest repr that round-trips; '.' decimal regardless of locale
    return repr(float(x))


def _make_parent(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {path.parent}: {exc.strerror}") from exc


def write_json(path, obj) -> None:
    path = Path(path)
    _make_parent(path)
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def write_columns(path, columns: dict[str, np.ndarray]) -> None:
    path = Path(path)
    _make_parent(path)
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    lines = [",".join(names)]
    for row in zip(*data):
        lines.append(",".join(fmt(v) for v in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc


def read_columns(path) -> dict[str, np.ndarray]:
    """Read a numeric CSV with a header row; errors carry line numbers."""
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataError(f"{path}:{reader.line_num}: non-numeric value in {row!r}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return {name: arr[:, k] for k, name in enumerate(header)}


def signal_from_columns(cols: dict[str, np.ndarray], fs: float | None = None,
                        column: str = "eda_us", source="input") -> Signal:
    if column not in cols:
        raise DataError(f"{source}: missing column {column!r} (have {sorted(cols)})")
    x = cols[column]
    if "time_s" in cols:
        t = cols["time_s"]
        if t.size < 2:
            raise DataError(f"{source}: need at least two samples to infer the sampling rate")
        dt = np.diff(t)
        period = float(np.median(dt))
        if period <= 0:
            raise DataError(f"{source}: timestamps must increase")
        jitter = float(np.max(np.abs(dt - period)))
        if jitter > JITTER_LIMIT * period:
            raise DataError(f"{source}: non-uniform timestamps (max jitter {jitter:.3g} s "
                            f"exceeds 1% of the {period:.3g} s period)")
        rate = 1.0 / period
        if fs is not None and abs(fs - rate) > JITTER_LIMIT * rate:
            raise DataError(f"{source}: --fs {fs} disagrees with timestamps ({rate:.6g} Hz)")
        return Signal(x, rate, float(t[0]))
    if fs is None:
        raise DataError(f"{source}: no time_s column; pass the sampling rate with --fs")
    return Signal(x, fs)


def read_signal(path, fs: float | None = None) -> Signal:
    return signal_from_columns(read_columns(path), fs, source=str(path))


def events_to_json(events) -> list[dict]:
    return [{"time_s": float(t), "amplitude_us": float(a)} for t, a in events]


def events_from_json(items) -> list[DriverEvent]:
    return [DriverEvent(float(e["time_s"]), float(e["amplitude_us"])) for e in items]


def timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


# --- simulated datasets -------------------------------------------------

def write_segment(out_dir, i: int, truth: GroundTruth) -> None:
    out_dir = Path(out_dir)
    cols = {"time_s": truth.times, "clean": truth.clean_composite,
            "tonic": truth.tonic, "phasic": truth.phasic}
    cols.update(truth.noisy)
    write_columns(out_dir / f"segment_{i}.csv", cols)
    write_json(out_dir / f"segment_{i}.events.json", {
        "schema_version": SCHEMA_VERSION,
        "segment": i,
        "seed": truth.seed,
        "tau2": truth.tau2,
        "events": events_to_json(truth.events),
    })


def list_segments(dataset_dir) -> list[int]:
    d = Path(dataset_dir)
    if not d.is_dir():
        raise DataError(f"not a directory: {d}")
    ids = sorted(int(m.group(1)) for p in d.iterdir() if (m := SEGMENT_RE.match(p.name)))
    if not ids:
        raise DataError(f"no segments found in {d}")
    return ids


def read_segment(dataset_dir, i: int) -> GroundTruth:
    d = Path(dataset_dir)
    cols = read_columns(d / f"segment_{i}.csv")
    meta = read_json(d / f"segment_{i}.events.json")
    for name in ("time_s", "clean", "tonic", "phasic"):
        if name not in cols:
            raise DataError(f"segment_{i}.csv: missing column {name!r}")
    t = cols["time_s"]
    fs = 1.0 / float(np.median(np.diff(t))) if t.size > 1 else 1.0
    noisy = {k: v for k, v in cols.items() if k.startswith("snr")}
    return GroundTruth(
        tonic=cols["tonic"], phasic=cols["phasic"], clean_composite=cols["clean"],
        driver=np.zeros(t.size), events=events_from_json(meta.get("events", [])),
        noisy=noisy, fs=fs, seed=meta.get("seed"), tau2=meta.get("tau2"),
    )


# --- decompositions -----------------------------------------------------

DECOMP_COLUMNS = ("time_s", "raw", "tonic", "phasic", "phasic_recon", "driver", "noise")


def write_decomposition(out_dir, stem: str, columns: dict, meta: dict) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    write_columns(csv_path, {k: columns[k] for k in DECOMP_COLUMNS})
    write_json(json_path, {"schema_version": SCHEMA_VERSION, **meta})
    return csv_path, json_path


def list_decompositions(decomp_dir) -> list[tuple[int, str]]:
    d = Path(decomp_dir)
    if not d.is_dir():
        raise DataError(f"not a directory: {d}")
    found = sorted((int(m.group(1)), m.group(2)) for p in d.iterdir() if (m := DECOMP_RE.match(p.name)))
    if not found:
        raise DataError(f"no segments found in {d}")
    return found


def read_decomposition(decomp_dir, i: int, label: str) -> tuple[dict, dict]:
    d = Path(decomp_dir)
    stem = f"segment_{i}_{label}"
    cols = read_columns(d / f"{stem}.csv")
    missing = [c for c in ("tonic", "phasic_recon") if c not in cols]
    if missing:
        raise DataError(f"{stem}.csv: missing columns {missing}")
    return cols, read_json(d / f"{stem}.json")
