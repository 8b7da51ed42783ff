"""CSV/report grammars and oracle cross-checks over synthesized logs."""

from __future__ import annotations

import json
import math

import pytest

from conftest import (
    FFT_FILLS,
    fft_template_dict,
    fill_template_dict,
    la_template_dict,
    pa_template_dict,
)
from ds2sc import oracles
from ds2sc.spec_ir import build_document, parse_template
from ds2sc.spec_ir import test_scenarios as extract_scenarios
from ds2sc.verdicts import (
    CheckResult,
    Report,
    VerdictError,
    cross_check,
    parse_csv_log,
    parse_report,
    render_report,
    summary_json,
)


# ---------------------------------------------------------------- CSV


def test_parse_csv_simple():
    log = parse_csv_log("time_ns,vin,vout\n0,0.0,0.0\n1,0.1,1.0\n")
    assert log.columns == ("time_ns", "vin", "vout")
    assert len(log.rows) == 2
    assert log.column("vout") == [0.0, 1.0]


def test_parse_csv_decreasing_timestamps_rejected():
    with pytest.raises(VerdictError, match="increasing"):
        parse_csv_log("t,v\n5,1\n3,2\n")


def test_parse_csv_missing_header_rejected():
    with pytest.raises(VerdictError, match="header"):
        parse_csv_log("0,1.0\n1,2.0\n")


def test_parse_csv_non_numeric_cell_positioned():
    with pytest.raises(VerdictError, match="row 3, column 2"):
        parse_csv_log("t,v\n0,1\n1,oops\n")


def test_parse_csv_ragged_rejected():
    with pytest.raises(VerdictError, match="cells"):
        parse_csv_log("t,v\n0,1,2\n")


def test_parse_csv_empty_rejected():
    with pytest.raises(VerdictError, match="empty"):
        parse_csv_log("")


# ------------------------------------------------------------- report


def test_parse_report_pass():
    assert parse_report("VERIFICATION RESULT: PASS\n").verdict == "pass"


def test_parse_report_bracketed_fail_with_check():
    report = parse_report("[Verification Result: FAIL]\nCHECK gain: FAIL - expected 0.4\n")
    assert report.verdict == "fail"
    assert report.checks == (("gain", False, "expected 0.4"),)


def test_parse_report_empty_rejected():
    with pytest.raises(VerdictError):
        parse_report("")
    with pytest.raises(VerdictError, match="verdict"):
        parse_report("hello world\n")


def test_parse_report_preserves_unknown_lines():
    report = parse_report("VERIFICATION RESULT: PASS\nnote: extra context\n")
    assert report.detail == ("note: extra context",)


def test_report_roundtrip():
    report = Report(
        verdict="fail",
        checks=(("gain", False, "expected 0.4"), ("clamp", True, "")),
        detail=("observed ringing near the clamp edge",),
    )
    assert parse_report(render_report(report)) == report


# --------------------------------------------------- cross-check: FFT


def fft_scenario():
    doc = build_document(
        parse_template(json.dumps(fft_template_dict())),
        json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS)),
    )
    return extract_scenarios(doc)[0]


def synth_fft_log() -> str:
    x = [complex(v, 0.0) for v in range(1, 9)]
    back = oracles.dft(oracles.dft(x), inverse=True)
    lines = ["time_ns,idx,in_re,in_im,out_re,out_im"]
    for i, (xin, out) in enumerate(zip(x, back)):
        lines.append(
            f"{i},{i},{xin.real:.17g},{xin.imag:.17g},{out.real:.17g},{out.imag:.17g}"
        )
    return "\n".join(lines) + "\n"


def test_cross_check_fft_self_consistent():
    results = cross_check(parse_csv_log(synth_fft_log()), fft_scenario())
    assert all(r.passed for r in results)
    assert results[0].measured <= 1e-12


def test_cross_check_fft_detects_wrong_scale():
    text = synth_fft_log()
    lines = text.splitlines()
    doctored = [lines[0]]
    for line in lines[1:]:
        t, i, ir, ii, orr, oi = line.split(",")
        doctored.append(f"{t},{i},{ir},{ii},{float(orr) * 8},{oi}")  # missing 1/N look-alike
    results = cross_check(parse_csv_log("\n".join(doctored) + "\n"), fft_scenario())
    assert not all(r.passed for r in results)
    failing = [r for r in results if not r.passed]
    assert failing[0].measured > 1.0


def test_cross_check_fft_missing_column():
    log = parse_csv_log("t,v\n0,1\n")
    with pytest.raises(VerdictError, match="out_re"):
        cross_check(log, fft_scenario())


# ---------------------------------------------------- cross-check: LA


LA_FILLS = {
    "gain": 10.0,
    "v_out_max": 0.4,
    "v_out_min": -0.4,
    "quiescent": 0.0,
    "enable_logic": "enable gates the output",
    "transfer_function": "vout = clamp(gain*vin)",
}


def la_scenario():
    d = la_template_dict()
    doc = build_document(
        parse_template(json.dumps(d)), json.dumps(fill_template_dict(d, LA_FILLS))
    )
    return extract_scenarios(doc)[0]


def synth_la_log() -> str:
    params = oracles.LaParams(gain=10.0, v_out_max=0.4, v_out_min=-0.4, quiescent=0.0)
    disabled = oracles.LaParams(
        gain=10.0, v_out_max=0.4, v_out_min=-0.4, quiescent=0.0, enabled=False
    )
    lines = ["time_ns,vin,vout,enable"]
    for t in range(3000):
        if t < 1000:
            amp, p, en = 0.01, params, 1
        elif t < 2000:
            amp, p, en = 0.2, params, 1
        else:
            amp, p, en = 0.2, disabled, 0
        vin = amp * math.sin(2 * math.pi * (t % 100) / 100.0)
        lines.append(f"{t},{vin:.12g},{oracles.la_transfer(vin, p):.12g},{en}")
    return "\n".join(lines) + "\n"


def test_cross_check_la_self_consistent():
    results = cross_check(parse_csv_log(synth_la_log()), la_scenario())
    assert [r.name for r in results] == ["window_amplitude", "window_clamp", "window_quiescent"]
    assert all(r.passed for r in results), results


def test_cross_check_la_disabled_window_detects_drift():
    lines = synth_la_log().splitlines()
    # corrupt the disabled window: output stuck at clamp level instead of quiescent
    doctored = []
    for line in lines:
        if not line.startswith("time_ns") and int(float(line.split(",")[0])) >= 2000:
            t, vin, vout, en = line.split(",")
            doctored.append(f"{t},{vin},0.4,{en}")
        else:
            doctored.append(line)
    results = cross_check(parse_csv_log("\n".join(doctored) + "\n"), la_scenario())
    by_name = {r.name: r for r in results}
    assert not by_name["window_quiescent"].passed


def test_cross_check_la_short_window_rejected():
    scenario = la_scenario()
    short = json.loads(json.dumps(scenario.stimulus))
    short["segments"][0]["t_end_ns"] = 50  # shorter than the 100 ns period
    from ds2sc.spec_ir import TestScenario

    broken = TestScenario(
        name=scenario.name, domain=scenario.domain, stimulus=short, expected=scenario.expected
    )
    with pytest.raises(VerdictError, match="period"):
        cross_check(parse_csv_log(synth_la_log()), broken)


# ---------------------------------------------------- cross-check: PA


def pa_scenario():
    d = pa_template_dict()
    doc = build_document(
        parse_template(json.dumps(d)),
        json.dumps(
            fill_template_dict(
                d,
                {
                    "g_db": 20.0,
                    "psat_dbm": 43.0,
                    "curve_points": [[0, 20.0], [23, 41.49]],
                    "compression_model": "soft knee",
                },
            )
        ),
    )
    return extract_scenarios(doc)[0]


def synth_pa_log(shift_db: float = 0.0) -> str:
    p = oracles.RappParams(g_db=20.0, psat_dbm=43.0, s=2.0)
    lines = ["time_ns,pin_dbm,pout_dbm"]
    pin = -30.0
    t = 0
    while pin <= 35.0 + 1e-9:
        lines.append(f"{t},{pin:.9g},{oracles.rapp_pout_dbm(pin, p) + shift_db:.9g}")
        pin += 0.5
        t += 1
    return "\n".join(lines) + "\n"


def test_cross_check_pa_self_consistent():
    results = cross_check(parse_csv_log(synth_pa_log()), pa_scenario())
    assert all(r.passed for r in results)
    assert results[0].measured < 1e-6


def test_cross_check_pa_within_tolerance_offset():
    results = cross_check(parse_csv_log(synth_pa_log(shift_db=0.7)), pa_scenario())
    assert all(r.passed for r in results)
    assert results[0].measured == pytest.approx(0.7, abs=1e-6)


def test_cross_check_pa_beyond_tolerance_fails():
    results = cross_check(parse_csv_log(synth_pa_log(shift_db=1.3)), pa_scenario())
    assert not all(r.passed for r in results)


# ------------------------------------------------------------ summary


def test_summary_json_shape():
    results = [CheckResult(name="x", passed=True, measured=1.0, expected=1.0, tolerance=0.1)]
    payload = json.loads(summary_json(fft_scenario(), results))
    assert payload["passed"] is True
    assert payload["checks"][0]["name"] == "x"
    assert payload["scenario"] == "fft_ifft_roundtrip"
