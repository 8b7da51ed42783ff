"""Workspace materialization, compile/simulate supervision, outcome classing.

Real mode shells out to the configured compiler over the single
translation unit ``main.cpp`` and then runs the produced binary with a
wall-clock timeout, capturing stdout/stderr in full. Stub mode consults a
directive file (``stub_behavior.json``) that scripts the outcome of each
attempt, so the whole pipeline is testable on machines without SystemC or
even a compiler.

Outcome classification feeds the two repair loops: compile errors route to
the syntax loop; runtime errors, timeouts, and FAIL reports route to the
functional loop.

Report grammar (first line, case-insensitive)::

    VERIFICATION RESULT: PASS|FAIL
    CHECK <name>: PASS|FAIL[ - detail]

CSV grammar: header row, first column a numeric timestamp in nanoseconds,
then one column per logged signal.
"""

from __future__ import annotations

import json
import logging
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .artifacts import GeneratedArtifact

__all__ = [
    "ToolchainConfig",
    "Workspace",
    "SimOutcome",
    "PipelineSignal",
    "ToolchainEnvironmentError",
    "StubDirectives",
    "materialize_workspace",
    "compile_workspace",
    "simulate",
    "classify",
]

log = logging.getLogger(__name__)

DEFAULT_SIM_TIMEOUT_S = 120
DEFAULT_COMPILE_TIMEOUT_S = 300
BINARY_NAME = "sim"


class ToolchainEnvironmentError(RuntimeError):
    """The toolchain itself is unusable (missing compiler/binary/stub)."""


class PipelineSignal(str, Enum):
    ok = "pass"
    functional_fail = "functional_fail"
    syntax_fail = "syntax_fail"
    runtime_fail = "runtime_fail"
    timeout = "timeout"


@dataclass(frozen=True)
class ToolchainConfig:
    compiler_cmd: str = "g++"
    include_paths: tuple[str, ...] = ()
    library_paths: tuple[str, ...] = ()
    link_libraries: tuple[str, ...] = ()
    extra_flags: tuple[str, ...] = ()
    sim_timeout_s: int = DEFAULT_SIM_TIMEOUT_S
    compile_timeout_s: int = DEFAULT_COMPILE_TIMEOUT_S
    mode: str = "real"  # real | stub
    stub_behavior: str | None = None  # directive file path, required in stub mode

    def __post_init__(self):
        if self.mode not in ("real", "stub"):
            raise ValueError(f"unknown toolchain mode {self.mode!r}")
        if self.mode == "stub" and not self.stub_behavior:
            raise ValueError("stub mode requires a stub_behavior directive file path")


@dataclass
class Workspace:
    root: Path
    files: list[GeneratedArtifact]
    attempt: int = 0
    binary: Path | None = None
    csv_path: Path | None = None
    report_path: Path | None = None
    vcd_path: Path | None = None


@dataclass(frozen=True)
class SimOutcome:
    phase: str  # compile | run
    status: str  # ok | compile_error | runtime_error | timeout
    exit_code: int
    stdout: str
    stderr: str
    duration_ms: int
    timeout_budget_s: int | None = None

    def __post_init__(self):
        if self.status == "compile_error" and self.phase != "compile":
            raise ValueError("compile_error outcomes belong to the compile phase")


def materialize_workspace(
    artifacts: list[GeneratedArtifact],
    run_root: Path | None = None,
    attempt: int = 0,
) -> Workspace:
    """Write artifacts byte-exact into a fresh isolated directory.

    Each attempt gets its own numbered sibling under the run root so prior
    attempts survive for audit; with no run root a unique temp dir is made.
    """
    names = [a.file_name for a in artifacts]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate artifact file names: {sorted(names)}")
    if sum(1 for a in artifacts if a.kind == "testbench_main") != 1:
        raise ValueError("exactly one testbench_main artifact is required")

    base = Path(tempfile.mkdtemp(prefix="ds2sc-ws-")) if run_root is None else Path(run_root)
    root = base / f"attempt-{attempt:03d}"
    root.mkdir(parents=True, exist_ok=False)
    for a in artifacts:
        target = root / a.file_name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(a.content, encoding="utf-8")
    return Workspace(root=root, files=list(artifacts), attempt=attempt)


def _load_stub(cfg: ToolchainConfig) -> "StubDirectives":
    path = Path(cfg.stub_behavior)
    if not path.exists():
        raise ToolchainEnvironmentError(f"stub directive file not found: {path}")
    return StubDirectives.load(path)


class StubDirectives:
    """Scripted compile/run outcomes, one entry per attempt.

    File schema::

        {"attempts": [
           {"compile": {"status": "compile_error", "stderr": "..."}},
           {"compile": {"status": "ok"},
            "run": {"status": "ok", "report": "...", "csv": "..."}}
         ],
         "repeat_last": true}

    Attempt selection is by workspace attempt index; past the end the last
    entry repeats when repeat_last (the default) is set.
    """

    def __init__(self, attempts: list[dict], repeat_last: bool = True):
        if not attempts:
            raise ToolchainEnvironmentError("stub directives declare no attempts")
        self.attempts = attempts
        self.repeat_last = repeat_last

    @classmethod
    def load(cls, path: Path) -> "StubDirectives":
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(data.get("attempts", []), data.get("repeat_last", True))

    def for_attempt(self, index: int) -> dict:
        if index < len(self.attempts):
            return self.attempts[index]
        if self.repeat_last:
            return self.attempts[-1]
        raise ToolchainEnvironmentError(f"stub directives exhausted at attempt {index}")


def compile_workspace(ws: Workspace, cfg: ToolchainConfig) -> SimOutcome:
    """Compile main.cpp into the simulator binary, capturing diagnostics.

    A missing compiler is an environment error, distinct from a compile
    error in the sources.
    """
    if cfg.mode == "stub":
        directive = _load_stub(cfg).for_attempt(ws.attempt).get("compile", {"status": "ok"})
        status = directive.get("status", "ok")
        if status not in ("ok", "compile_error", "timeout"):
            raise ToolchainEnvironmentError(f"stub compile status {status!r} not recognised")
        if status == "ok":
            ws.binary = ws.root / BINARY_NAME
            ws.binary.touch()
        return SimOutcome(
            phase="compile",
            status=status,
            exit_code=int(directive.get("exit_code", 0 if status == "ok" else 1)),
            stdout=directive.get("stdout", ""),
            stderr=directive.get("stderr", ""),
            duration_ms=0,
        )

    if shutil.which(cfg.compiler_cmd) is None:
        raise ToolchainEnvironmentError(f"compiler not found: {cfg.compiler_cmd}")
    cmd = [cfg.compiler_cmd, "main.cpp"]
    cmd += [f"-I{p}" for p in cfg.include_paths]
    cmd += [f"-L{p}" for p in cfg.library_paths]
    cmd += [f"-l{lib}" for lib in cfg.link_libraries]
    cmd += list(cfg.extra_flags)
    cmd += ["-o", BINARY_NAME]
    log.info("compile: %s (cwd=%s)", " ".join(cmd), ws.root)
    started = time.monotonic()
    try:
        proc = subprocess.run(
            cmd,
            cwd=ws.root,
            capture_output=True,
            text=True,
            timeout=cfg.compile_timeout_s,
        )
    except subprocess.TimeoutExpired as e:
        return SimOutcome(
            phase="compile",
            status="timeout",
            exit_code=-1,
            stdout=(e.stdout or b"").decode("utf-8", "replace") if isinstance(e.stdout, bytes) else (e.stdout or ""),
            stderr="compilation timed out",
            duration_ms=int((time.monotonic() - started) * 1000),
            timeout_budget_s=cfg.compile_timeout_s,
        )
    duration = int((time.monotonic() - started) * 1000)
    if proc.returncode == 0:
        ws.binary = ws.root / BINARY_NAME
        return SimOutcome("compile", "ok", 0, proc.stdout, proc.stderr, duration)
    return SimOutcome("compile", "compile_error", proc.returncode, proc.stdout, proc.stderr, duration)


def _collect_outputs(ws: Workspace) -> None:
    csvs = sorted(ws.root.glob("*.csv"))
    ws.csv_path = csvs[0] if csvs else None
    reports = sorted(ws.root.glob("*.txt"))
    preferred = [p for p in reports if p.name == "report.txt"]
    ws.report_path = preferred[0] if preferred else (reports[0] if reports else None)
    vcds = sorted(ws.root.glob("*.vcd"))
    ws.vcd_path = vcds[0] if vcds else None


def simulate(ws: Workspace, cfg: ToolchainConfig) -> SimOutcome:
    """Run the compiled simulator in its workspace with a wall-clock budget.

    Collects the produced ``*.csv`` log, ``*.txt`` report, and optional
    ``*.vcd`` trace into the workspace record.
    """
    if cfg.mode == "stub":
        directive = _load_stub(cfg).for_attempt(ws.attempt).get("run", {"status": "ok"})
        status = directive.get("status", "ok")
        if status not in ("ok", "runtime_error", "timeout"):
            raise ToolchainEnvironmentError(f"stub run status {status!r} not recognised")
        if "csv" in directive:
            ws.csv_path = ws.root / "results.csv"
            ws.csv_path.write_text(directive["csv"], encoding="utf-8")
        if "report" in directive:
            ws.report_path = ws.root / "report.txt"
            ws.report_path.write_text(directive["report"], encoding="utf-8")
        return SimOutcome(
            phase="run",
            status=status,
            exit_code=int(directive.get("exit_code", 0 if status == "ok" else 1)),
            stdout=directive.get("stdout", ""),
            stderr=directive.get("stderr", ""),
            duration_ms=0,
            timeout_budget_s=cfg.sim_timeout_s if status == "timeout" else None,
        )

    if ws.binary is None or not Path(ws.binary).exists():
        raise ToolchainEnvironmentError("no simulator binary; compile first")
    started = time.monotonic()
    try:
        proc = subprocess.run(
            [str(ws.binary)],
            cwd=ws.root,
            capture_output=True,
            text=True,
            timeout=cfg.sim_timeout_s,
        )
    except subprocess.TimeoutExpired as e:
        _collect_outputs(ws)
        out = e.stdout or ""
        err = e.stderr or ""
        if isinstance(out, bytes):
            out = out.decode("utf-8", "replace")
        if isinstance(err, bytes):
            err = err.decode("utf-8", "replace")
        return SimOutcome(
            phase="run",
            status="timeout",
            exit_code=-1,
            stdout=out,
            stderr=err,
            duration_ms=int((time.monotonic() - started) * 1000),
            timeout_budget_s=cfg.sim_timeout_s,
        )
    duration = int((time.monotonic() - started) * 1000)
    _collect_outputs(ws)
    status = "ok" if proc.returncode == 0 else "runtime_error"
    return SimOutcome("run", status, proc.returncode, proc.stdout, proc.stderr, duration)


def classify(compile_oc: SimOutcome, run_oc: SimOutcome | None = None, report=None) -> PipelineSignal:
    """Deterministic total mapping of attempt outcomes onto a loop signal.

    ``report`` is a parsed verdicts.Report (or anything with a ``verdict``
    of "pass"/"fail"); a missing report after a clean run is a contract
    breach and classifies as a runtime failure.
    """
    if compile_oc.status == "compile_error":
        return PipelineSignal.syntax_fail
    if compile_oc.status == "timeout":
        return PipelineSignal.syntax_fail
    if run_oc is None:
        return PipelineSignal.runtime_fail
    if run_oc.status == "timeout":
        return PipelineSignal.timeout
    if run_oc.status == "runtime_error":
        return PipelineSignal.runtime_fail
    if report is None:
        return PipelineSignal.runtime_fail
    verdict = getattr(report, "verdict", report)
    if str(verdict) == "fail":
        return PipelineSignal.functional_fail
    return PipelineSignal.ok
