"""File formats: record sets, shot-noise sweeps, calibration and reports.

Every file carries a ``schema_version``; readers refuse unknown major
versions.  Writes go to a temporary file in the target directory that is
then renamed over the destination.
"""

from __future__ import annotations

import contextlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .calibration import CalibrationFit, ShotNoiseEnv
from .chain_sim import QUAD_COLUMNS, RecordSet
from .errors import ConfigError, SchemaVersionError

SCHEMA_VERSION = "1.0"
RECORD_COLUMNS = ("cycle", "pump_on") + QUAD_COLUMNS


def check_schema(version) -> None:
    if version is None:
        raise SchemaVersionError("missing schema_version")
    major = str(version).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise SchemaVersionError(f"unsupported schema version {version!r}")


@contextlib.contextmanager
def atomic_open(path, mode="w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_json(path, obj: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **obj}
    with atomic_open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    check_schema(doc.get("schema_version"))
    return doc


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(s: str):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    if s in ("True", "False"):
        return s == "True"
    return s


def _header_lines(meta: dict) -> list[str]:
    items = {"schema_version": SCHEMA_VERSION, **meta}
    return [f"# {k}={_format_value(v)}\n" for k, v in items.items()]


def read_csv_header(path) -> tuple[dict, int]:
    """Metadata from leading ``# key=value`` lines and the number of such lines."""
    meta, count = {}, 0
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            count += 1
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, val = body.split("=", 1)
            meta[key.strip()] = _parse_value(val.strip())
    check_schema(meta.get("schema_version"))
    return meta, count


# record sets -----------------------------------------------------------------

def write_records_csv(path, rs: RecordSet) -> None:
    table = np.column_stack([rs.cycle, rs.pump_on.astype(np.int64), rs.quadratures])
    with atomic_open(path) as fh:
        fh.writelines(_header_lines({**rs.meta, "record_count": len(rs)}))
        fh.write(",".join(RECORD_COLUMNS) + "\n")
        np.savetxt(fh, table, fmt=["%d", "%d"] + ["%.17g"] * 4, delimiter=",")


def read_records_csv(path) -> RecordSet:
    meta, skip = read_csv_header(path)
    table = np.loadtxt(path, delimiter=",", skiprows=skip + 1, ndmin=2)
    if table.size == 0:
        table = np.empty((0, 6))
    if table.shape[1] != 6:
        raise ConfigError(f"{path}: expected 6 columns, found {table.shape[1]}")
    count = meta.pop("record_count", None)
    if count is not None and count != table.shape[0]:
        raise ConfigError(f"{path}: header says {count} records, found {table.shape[0]}")
    meta.pop("schema_version", None)
    return RecordSet(table[:, 0].astype(np.int64), table[:, 1] != 0, table[:, 2:], meta)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_records_bin(path, rs: RecordSet) -> None:
    table = np.column_stack([rs.cycle, rs.pump_on, rs.quadratures]).astype("<f8")
    with atomic_open(path, "wb") as fh:
        fh.write(table.tobytes(order="C"))
    write_json(
        sidecar_path(path),
        {
            "record_count": len(rs),
            "columns": list(RECORD_COLUMNS),
            "dtype": "<f8",
            "meta": rs.meta,
        },
    )


def read_records_bin(path) -> RecordSet:
    side = read_json(sidecar_path(path))
    if side.get("columns") != list(RECORD_COLUMNS) or side.get("dtype") != "<f8":
        raise ConfigError(f"{path}: unexpected binary layout")
    table = np.fromfile(path, dtype="<f8").reshape(-1, len(RECORD_COLUMNS))
    if table.shape[0] != side["record_count"]:
        raise ConfigError(f"{path}: sidecar says {side['record_count']} records, found {table.shape[0]}")
    return RecordSet(table[:, 0].astype(np.int64), table[:, 1] != 0, table[:, 2:], side.get("meta", {}))


def write_records(path, rs: RecordSet, fmt: str = "bin") -> Path:
    path = Path(path)
    if fmt == "csv":
        write_records_csv(path, rs)
    elif fmt == "bin":
        write_records_bin(path, rs)
    else:
        raise ConfigError(f"unknown record format {fmt!r}")
    return path


def read_records(path) -> RecordSet:
    path = Path(path)
    if path.suffix == ".csv":
        return read_records_csv(path)
    return read_records_bin(path)


# shot noise and calibration -----------------------------------------------------

def write_shot_noise_csv(path, data, env: ShotNoiseEnv, Bw: float) -> None:
    meta = {"T": env.t, "R": env.r, "Z0": env.z0, "f": env.f, "Bw": Bw}
    with atomic_open(path) as fh:
        fh.writelines(_header_lines(meta))
        fh.write("I_amps,S_p_detected\n")
        for cur, s in data:
            fh.write(f"{cur!r},{s!r}\n")


def read_shot_noise_csv(path) -> tuple[list, ShotNoiseEnv, float]:
    meta, skip = read_csv_header(path)
    missing = [k for k in ("T", "R", "Z0", "f", "Bw") if k not in meta]
    if missing:
        raise ConfigError(f"{path}: header lacks {', '.join(missing)}")
    table = np.loadtxt(path, delimiter=",", skiprows=skip + 1, ndmin=2)
    env = ShotNoiseEnv(t=float(meta["T"]), r=float(meta["R"]), z0=float(meta["Z0"]), f=float(meta["f"]))
    return [tuple(row) for row in table.tolist()], env, float(meta["Bw"])


def write_calibration(path, fit: CalibrationFit) -> None:
    write_json(path, fit.as_dict())


def read_calibration(path) -> CalibrationFit:
    doc = read_json(path)
    try:
        return CalibrationFit(
            G=float(doc["G"]), T_n=float(doc["T_n"]), dG=float(doc["dG"]),
            dT_n=float(doc["dT_n"]), f=float(doc["f"]), Bw=float(doc["Bw"]),
            residual_rms=float(doc["residual_rms"]),
            warnings=tuple(doc.get("warnings", ())),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from exc


# analysis outputs ------------------------------------------------------------------

def write_histogram_csv(path, hist) -> None:
    meta = {
        "pair": hist.pair,
        "x_min": float(hist.x_edges[0]), "x_max": float(hist.x_edges[-1]), "x_bins": hist.counts.shape[0],
        "y_min": float(hist.y_edges[0]), "y_max": float(hist.y_edges[-1]), "y_bins": hist.counts.shape[1],
        "n_on": hist.n_on, "n_off": hist.n_off,
    }
    with atomic_open(path) as fh:
        fh.writelines(_header_lines(meta))
        fh.write("# rows index x bins, columns index y bins; counts are on minus off\n")
        np.savetxt(fh, hist.counts, fmt="%d", delimiter=",")


def write_table_csv(path, header: list[str], rows: list[list]) -> None:
    with atomic_open(path) as fh:
        fh.writelines(_header_lines({}))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(v) for v in row) + "\n")
