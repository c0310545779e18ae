import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ultraspot.errors import OrderViolation, ParseError, UnknownDevice
from ultraspot.estimator import DetectionEvent, TimingErrors
from ultraspot.likelihood import ScanResult
from ultraspot.sim import DropModel, ScenarioConfig, simulate
from ultraspot.traceio import (dumps, emit_report, fmt_float, load_events, load_trace, to_arrays, trace_records,
                               write_events, write_trace)


def test_empty_file(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text("")
    assert load_trace(p) == []


def _rec(t, dev, **kw):
    r = {"t_ns": t, "device_id": dev, "phase_rad": 0.1, "rssi_dbm": -60.0, "packet_ok": True}
    r.update(kw)
    return json.dumps(r)


def test_order_violation_line(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text("\n".join([_rec(0, 1), _rec(0, 2), _rec(0, 2)]) + "\n")
    with pytest.raises(OrderViolation) as exc:
        load_trace(p)
    assert exc.value.line == 3


def test_parse_errors(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text(_rec(0, 1) + "\n{oops\n")
    with pytest.raises(ParseError) as exc:
        load_trace(p)
    assert exc.value.line == 2
    p.write_text(_rec(0, 1, phase_rad="x") + "\n")
    with pytest.raises(ParseError):
        load_trace(p)
    p.write_text(_rec(0, 7) + "\n")
    with pytest.raises(UnknownDevice):
        load_trace(p)


def test_trace_round_trip(tmp_path):
    cfg = ScenarioConfig(phase_noise_std_rad=0.05, rssi_noise_std_db=3.0, drop_model=DropModel("iid", 0.2),
                         duration_s=5.0)
    tr = simulate(cfg)
    p = tmp_path / "t.jsonl"
    write_trace(trace_records(tr), p)
    arr = to_arrays(load_trace(p))
    assert np.array_equal(arr.t_ns, tr.t_ns)
    assert np.array_equal(arr.packet_ok, tr.packet_ok)
    np.testing.assert_allclose(arr.phase_rad, tr.phase_rad, rtol=5e-9)
    np.testing.assert_allclose(arr.rssi_dbm, tr.rssi_dbm, rtol=5e-9)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_nine_digit_round_trip(x):
    y = json.loads(dumps(x))
    assert y == fmt_float(x)
    assert fmt_float(y) == y


def test_events_round_trip(tmp_path):
    ev = [DetectionEvent(5, "PhaseTransition", {"from": "FarField", "to": "Approaching"}),
          DetectionEvent(9, "Activation", {"activate_ns": 123})]
    p = tmp_path / "e.jsonl"
    write_events(ev, p)
    assert load_events(p) == ev


def test_report_schemas(tmp_path):
    errs = TimingErrors(eps_entWi=0.01, eps_exitWi=0.02, eps_entRTK=0.05, eps_exitRTK=0.06)
    scan = ScanResult(np.array([0.0, 0.1]), np.zeros((2, 4)), {}, 1)
    paths = emit_report(tmp_path, "csv", events=[], errors=[errs], scan=scan)
    names = sorted(p.rsplit("/", 1)[-1] for p in map(str, paths))
    assert names == ["errors.csv", "events.csv", "events.jsonl", "likelihood_map.csv"]
    assert (tmp_path / "events.csv").read_text() == "t_ns,kind,payload\n"
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0].split(",") == list(TimingErrors.FIELDS)
    assert lines[1] == "0.01,0.02,,,0.05,0.06"
    assert (tmp_path / "likelihood_map.csv").read_text().splitlines()[0] == \
        "position_m,logLambda_case1,logLambda_case2,logLambda_case3,logLambda_case4"


def test_jsonl_report(tmp_path):
    emit_report(tmp_path, "jsonl", errors=[TimingErrors(eps_entWi=0.5)])
    row = json.loads((tmp_path / "errors.jsonl").read_text())
    assert row["eps_entWi"] == 0.5 and row["eps_entGNSS"] is None
