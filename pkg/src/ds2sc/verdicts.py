"""Simulation log/report parsing and oracle cross-checks.

The generated testbench is trusted to judge itself through its report, but
its checker logic was produced by the same process as the model, so an
identical conceptual error could hide in both. ``cross_check`` re-derives
the expectations from the independent numeric oracles and measures the CSV
log against them: digital logs are compared to the direct-DFT round trip,
analog windows to the limiting-amplifier transfer, RF sweeps to the Rapp
curve.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from . import oracles
from .spec_ir import TestScenario

__all__ = [
    "CsvLog",
    "Report",
    "CheckResult",
    "VerdictError",
    "parse_csv_log",
    "parse_report",
    "render_report",
    "cross_check",
    "summary_json",
]

VERDICT_RE = re.compile(r"^\[?\s*verification result\s*:\s*(pass|fail)\s*\]?\s*$", re.IGNORECASE)
CHECK_RE = re.compile(r"^CHECK\s+(\S+)\s*:\s*(PASS|FAIL)(?:\s*-\s*(.*))?$", re.IGNORECASE)


class VerdictError(ValueError):
    """Log or report text violates its grammar."""


@dataclass(frozen=True)
class CsvLog:
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def column(self, name: str) -> list[float]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise VerdictError(f"missing column {name!r}; have {list(self.columns)}") from None
        return [r[idx] for r in self.rows]

    @property
    def timestamps(self) -> list[float]:
        return [r[0] for r in self.rows]


@dataclass(frozen=True)
class Report:
    verdict: str  # pass | fail
    checks: tuple[tuple[str, bool, str], ...] = ()
    detail: tuple[str, ...] = ()


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float


def parse_csv_log(text: str) -> CsvLog:
    """Parse a timestamped simulation CSV: header plus numeric rows.

    Rejects missing headers, ragged rows, non-numeric cells (with their
    position), and non-increasing timestamps.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise VerdictError("empty CSV log")
    header = [c.strip() for c in lines[0].split(",")]
    if len(header) < 2 or any(not c for c in header):
        raise VerdictError(f"malformed CSV header: {lines[0]!r}")
    header_is_numeric = True
    try:
        float(header[0])
    except ValueError:
        header_is_numeric = False
    if header_is_numeric:
        raise VerdictError("CSV log has no header row")
    rows: list[tuple[float, ...]] = []
    for r, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise VerdictError(f"row {r}: expected {len(header)} cells, got {len(cells)}")
        vals = []
        for c, cell in enumerate(cells, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise VerdictError(f"row {r}, column {c}: non-numeric cell {cell!r}") from None
        rows.append(tuple(vals))
    for prev, cur in zip(rows, rows[1:]):
        if cur[0] <= prev[0]:
            raise VerdictError(f"timestamps not strictly increasing at t={cur[0]}")
    return CsvLog(columns=tuple(header), rows=tuple(rows))


def parse_report(text: str) -> Report:
    """Parse a verification report: verdict line, then CHECK lines.

    The verdict is the first non-blank line, matched case-insensitively and
    accepting the bracketed form. CHECK lines parse leniently; anything
    else is preserved as detail.
    """
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx == len(lines):
        raise VerdictError("no verdict line found in report")
    m = VERDICT_RE.match(lines[idx].strip())
    if m is None:
        raise VerdictError(f"no verdict line found; first line is {lines[idx]!r}")
    verdict = m.group(1).lower()
    checks: list[tuple[str, bool, str]] = []
    detail: list[str] = []
    for line in lines[idx + 1 :]:
        if not line.strip():
            continue
        cm = CHECK_RE.match(line.strip())
        if cm:
            checks.append((cm.group(1), cm.group(2).upper() == "PASS", cm.group(3) or ""))
        else:
            detail.append(line)
    return Report(verdict=verdict, checks=tuple(checks), detail=tuple(detail))


def render_report(report: Report) -> str:
    """Canonical text rendering; parse_report of the result round-trips."""
    lines = [f"VERIFICATION RESULT: {report.verdict.upper()}"]
    for name, passed, det in report.checks:
        line = f"CHECK {name}: {'PASS' if passed else 'FAIL'}"
        if det:
            line += f" - {det}"
        lines.append(line)
    lines.extend(report.detail)
    return "\n".join(lines) + "\n"


def _window_rows(log: CsvLog, t0: float, t1: float) -> list[tuple[float, ...]]:
    rows = [r for r in log.rows if t0 <= r[0] < t1]
    if not rows:
        raise VerdictError(f"window [{t0}, {t1}) outside logged time range")
    return rows


def _check(name: str, measured: float, expected: float, tolerance: float) -> CheckResult:
    return CheckResult(
        name=name,
        passed=abs(measured - expected) <= tolerance,
        measured=measured,
        expected=expected,
        tolerance=tolerance,
    )


def _cross_check_digital(log: CsvLog, scenario: TestScenario) -> list[CheckResult]:
    stim = scenario.stimulus
    x = [complex(v) for v in stim.get("input_real", [])]
    if not x:
        raise VerdictError("digital scenario declares no input vector")
    reference = oracles.dft(oracles.dft(x), inverse=True)
    out_re = log.column("out_re")
    out_im = log.column("out_im")
    if len(out_re) < len(x):
        raise VerdictError(f"log has {len(out_re)} rows, need {len(x)}")
    results = []
    for chk in scenario.expected:
        err = 0.0
        for i, ref in enumerate(reference):
            err = max(err, abs(out_re[i] - ref.real), abs(out_im[i] - ref.imag))
        results.append(_check(chk.check, err, chk.value, chk.tolerance))
    return results


def _la_params(params: dict) -> oracles.LaParams:
    return oracles.LaParams(
        gain=float(params["gain"]),
        v_out_max=float(params["v_out_max_v"]),
        v_out_min=float(params["v_out_min_v"]),
        quiescent=float(params["quiescent_v"]),
    )


def _cross_check_analog(log: CsvLog, scenario: TestScenario) -> list[CheckResult]:
    stim = scenario.stimulus
    segments = {seg["name"]: seg for seg in stim.get("segments", [])}
    params = _la_params(stim.get("params", {}))
    vout = "vout"
    results = []
    for chk in scenario.expected:
        seg = segments.get(chk.params.get("window"))
        if seg is None:
            raise VerdictError(f"check {chk.check} names unknown window {chk.params.get('window')!r}")
        t0, t1 = float(seg["t_start_ns"]), float(seg["t_end_ns"])
        period_ns = 1e9 / float(seg["frequency_hz"])
        if (t1 - t0) < period_ns:
            raise VerdictError(
                f"window {seg['name']!r} of {t1 - t0} ns is shorter than one stimulus period"
            )
        rows = _window_rows(log, t0, t1)
        out_idx = log.columns.index(vout) if vout in log.columns else None
        if out_idx is None:
            raise VerdictError("missing column 'vout'")
        values = [r[out_idx] for r in rows]
        amp_in = float(seg["amplitude_v"])
        if chk.check == "window_amplitude":
            measured = (max(values) - min(values)) / 2.0
            expected = (oracles.la_transfer(amp_in, params) - oracles.la_transfer(-amp_in, params)) / 2.0
        elif chk.check == "window_clamp":
            measured = max(values)
            expected = oracles.la_transfer(amp_in, params)
        elif chk.check == "window_quiescent":
            disabled = oracles.LaParams(
                gain=params.gain,
                v_out_max=params.v_out_max,
                v_out_min=params.v_out_min,
                quiescent=params.quiescent,
                enabled=False,
            )
            expected = oracles.la_transfer(amp_in, disabled)
            measured = max(values, key=lambda v: abs(v - expected))
        else:
            raise VerdictError(f"unknown analog check {chk.check!r}")
        results.append(_check(chk.check, measured, expected, chk.tolerance))
    return results


def _cross_check_rf(log: CsvLog, scenario: TestScenario) -> list[CheckResult]:
    stim = scenario.stimulus
    params = stim.get("params", {})
    rp = oracles.RappParams(
        g_db=float(params["g_db"]),
        psat_dbm=float(params["psat_dbm"]),
        s=float(params["s"]),
    )
    pins = log.column("pin_dbm")
    pouts = log.column("pout_dbm")
    measured_curve = [oracles.CurvePoint(p, q) for p, q in zip(pins, pouts)]
    measured_curve.sort(key=lambda pt: pt.pin_dbm)
    reference_curve = [
        oracles.CurvePoint(pt.pin_dbm, oracles.rapp_pout_dbm(pt.pin_dbm, rp))
        for pt in measured_curve
    ]
    results = []
    for chk in scenario.expected:
        err = oracles.curve_max_error_db(measured_curve, reference_curve)
        results.append(_check(chk.check, err, chk.value, chk.tolerance))
    return results


def cross_check(log: CsvLog, scenario: TestScenario) -> list[CheckResult]:
    """Measure the log against oracle predictions for one scenario.

    Independent double-check of the generated testbench's own verdict;
    dispatches on the scenario domain.
    """
    if scenario.domain.value == "digital":
        return _cross_check_digital(log, scenario)
    if scenario.domain.value == "analog":
        return _cross_check_analog(log, scenario)
    return _cross_check_rf(log, scenario)


def summary_json(scenario: TestScenario, results: list[CheckResult]) -> str:
    """Cross-check summary as stable JSON for the run directory."""
    payload = {
        "scenario": scenario.name,
        "domain": scenario.domain.value,
        "passed": all(r.passed for r in results),
        "checks": [
            {
                "name": r.name,
                "passed": r.passed,
                "measured": _round_float(r.measured),
                "expected": _round_float(r.expected),
                "tolerance": r.tolerance,
            }
            for r in results
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _round_float(v: float) -> float:
    if not math.isfinite(v):
        return v
    return float(f"{v:.12g}")
