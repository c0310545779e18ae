"""JSONL traces and events, CSV/JSONL reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import OrderViolation, ParseError, UnknownDevice
from .estimator import DetectionEvent, TimingErrors
from .phase import PhaseSample

SIG_DIGITS = 9
ERROR_COLUMNS = TimingErrors.FIELDS


def fmt_float(v: float) -> float:
    """Round to 9 significant digits; JSON then writes the shortest repr."""
    return float(f"{v:.{SIG_DIGITS}g}")


def _jsonable(v):
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return fmt_float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class TraceRecord:
    sample: PhaseSample
    d_true_m: Optional[float] = None
    along_track_m: Optional[float] = None

    def to_json(self) -> str:
        s = self.sample
        rec = {"t_ns": s.t_ns, "device_id": s.device_id, "phase_rad": s.phase_rad,
               "rssi_dbm": s.rssi_dbm, "packet_ok": s.packet_ok}
        if self.d_true_m is not None:
            rec["truth"] = {"d_true_m": self.d_true_m, "along_track_m": self.along_track_m}
        return dumps(rec)


def trace_records(trace) -> Iterator[TraceRecord]:
    """TraceRecords of a SimTrace in (t_ns, device_id) order, with truth."""
    d = trace.device_distance_m
    along = trace.trajectory.along_track_m
    for j, t in enumerate(trace.t_ns.tolist()):
        for i in range(d.shape[1]):
            s = PhaseSample(t, i + 1, float(trace.phase_rad[j, i]), float(trace.rssi_dbm[j, i]),
                            bool(trace.packet_ok[j, i]))
            yield TraceRecord(s, float(d[j, i]), float(along[j]))


def write_trace(records: Iterable[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def _field(obj: dict, name: str, kind, line: int):
    if name not in obj:
        raise ParseError(line, f"missing field {name!r}")
    v = obj[name]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ParseError(line, f"{name} must be an integer")
    if kind is float and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise ParseError(line, f"{name} must be a number")
    if kind is bool and not isinstance(v, bool):
        raise ParseError(line, f"{name} must be a boolean")
    return float(v) if kind is float else v


def iter_trace(path, n_devices: int = 4) -> Iterator[TraceRecord]:
    """Validated records; line numbers are 1-based and count blank lines."""
    last_key = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(line_no, "record must be a JSON object")
            t = _field(obj, "t_ns", int, line_no)
            dev = _field(obj, "device_id", int, line_no)
            if not 1 <= dev <= n_devices:
                raise UnknownDevice(line_no, f"device_id {dev} outside 1..{n_devices}")
            key = (t, dev)
            if last_key is not None and key <= last_key:
                raise OrderViolation(line_no, f"record {key} does not follow {last_key}")
            last_key = key
            try:
                sample = PhaseSample(t, dev, _field(obj, "phase_rad", float, line_no),
                                     _field(obj, "rssi_dbm", float, line_no),
                                     _field(obj, "packet_ok", bool, line_no))
            except ValueError as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(line_no, str(exc)) from None
            truth = obj.get("truth")
            if truth is not None:
                if not isinstance(truth, dict):
                    raise ParseError(line_no, "truth must be an object")
                yield TraceRecord(sample, _field(truth, "d_true_m", float, line_no),
                                  _field(truth, "along_track_m", float, line_no))
            else:
                yield TraceRecord(sample)


def load_trace(path, n_devices: int = 4) -> list:
    """All PhaseSamples of a trace file, validated."""
    return [r.sample for r in iter_trace(path, n_devices)]


@dataclass
class TraceArrays:
    t_ns: np.ndarray
    phase_rad: np.ndarray
    rssi_dbm: np.ndarray
    packet_ok: np.ndarray


def to_arrays(samples: Sequence[PhaseSample], n_devices: int = 4) -> TraceArrays:
    """Epoch-major arrays; every epoch must carry every device."""
    if len(samples) % n_devices:
        raise ValueError("trace does not hold a whole number of epochs")
    n = len(samples) // n_devices
    t = np.empty(n, dtype=np.int64)
    ph = np.empty((n, n_devices))
    rs = np.empty((n, n_devices))
    ok = np.empty((n, n_devices), dtype=bool)
    for idx, s in enumerate(samples):
        j, i = divmod(idx, n_devices)
        if s.device_id != i + 1 or (i and s.t_ns != t[j]):
            raise ValueError(f"epoch {j} is incomplete or misaligned at device {s.device_id}")
        t[j] = s.t_ns
        ph[j, i], rs[j, i], ok[j, i] = s.phase_rad, s.rssi_dbm, s.packet_ok
    return TraceArrays(t, ph, rs, ok)


def event_record(ev: DetectionEvent) -> str:
    return dumps({"t_ns": ev.t_ns, "kind": ev.kind, "payload": ev.payload})


def write_events(events: Iterable[DetectionEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(event_record(ev))
            fh.write("\n")


def load_events(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(DetectionEvent(int(obj["t_ns"]), obj["kind"], obj["payload"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(line_no, f"bad event record: {exc}") from None
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{SIG_DIGITS}g}"
    return str(v)


def table_text(header: Sequence[str], rows: Iterable[Sequence], fmt: str) -> str:
    """CSV with a fixed header, or one JSON object per row."""
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    elif fmt == "jsonl":
        for row in rows:
            buf.write(dumps(dict(zip(header, row))))
            buf.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()


def events_table(events: Sequence[DetectionEvent]):
    header = ("t_ns", "kind", "payload")
    rows = [(e.t_ns, e.kind, dumps(e.payload)) for e in events]
    return header, rows


def errors_table(errors: Sequence[Optional[TimingErrors]]):
    rows = [e.as_row() if e is not None else [None] * len(ERROR_COLUMNS) for e in errors]
    return ERROR_COLUMNS, rows


def map_table(scan):
    header = ("position_m",) + tuple(f"logLambda_case{i}" for i in range(1, 5))
    rows = [(x, *vals) for x, vals in zip(scan.grid_m.tolist(), scan.log_lambda.tolist())]
    return header, rows


def emit_report(out_dir, fmt: str = "csv", events: Optional[Sequence[DetectionEvent]] = None,
                errors: Optional[Sequence[Optional[TimingErrors]]] = None, scan=None) -> list:
    """Write whichever of events/errors/likelihood map are given; returns the paths.

    Events always go out as JSONL as well, since their payloads are nested.
    """
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name, header, rows):
        path = os.path.join(out_dir, f"{name}.{fmt}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table_text(header, rows, fmt))
        written.append(path)

    if events is not None:
        if fmt == "csv":
            put("events", *events_table(events))
        path = os.path.join(out_dir, "events.jsonl")
        write_events(events, path)
        written.append(path)
    if errors is not None:
        put("errors", *errors_table(errors))
    if scan is not None:
        put("likelihood_map", *map_table(scan))
    return written
