"""Top-level pipeline: parse -> generate -> testbench -> build/simulate ->
repair loops -> verified result.

One run is a single thread of control. After the three generation stages,
every attempt compiles and (when compilation succeeds) simulates; the
classified signal either finishes the run or routes to one of the two
repair loops. A repair always forces a fresh compile, so a functional fix
that breaks the build is caught by the syntax loop on the next attempt.
Budgets are per-loop. The whole run is audited into ``run.json``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import agents, ingest, spec_ir, toolchain, verdicts
from .agents import AgentConfig, DebugContext, default_agent_configs
from .artifacts import GeneratedArtifact
from .gateway import Gateway, GatewayError, ProviderConfig
from .toolchain import PipelineSignal, SimOutcome, ToolchainConfig, ToolchainEnvironmentError

__all__ = [
    "PipelineConfig",
    "PipelineState",
    "IterationRecord",
    "PipelineResult",
    "PipelineError",
    "run_pipeline",
    "package_syntax_context",
    "package_functional_context",
]

log = logging.getLogger(__name__)

STDERR_BUDGET_BYTES = 200_000
CSV_ROW_BUDGET = 2000
TRUNCATION_BANNER = "[truncated: showing last {kept} of {total} bytes]"


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    max_syntax_iters: int = 5
    max_functional_iters: int = 3
    agent_configs: dict[str, AgentConfig] = field(default_factory=default_agent_configs)
    toolchain: ToolchainConfig = field(default_factory=ToolchainConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    header_name: str = agents.DEFAULT_HEADER_NAME
    testbench_name: str = agents.DEFAULT_TESTBENCH_NAME
    char_budget: int = ingest.DEFAULT_CHAR_BUDGET
    datasheet_format: str = "markdown"
    datasheet_domain: str | None = None  # defaults to the template's domain

    def __post_init__(self):
        if self.max_syntax_iters < 1 or self.max_functional_iters < 1:
            raise ValueError("iteration budgets must be >= 1")


@dataclass
class PipelineState:
    stage: str = "parsing"
    spec: spec_ir.SpecIrDocument | None = None
    artifacts: dict[str, GeneratedArtifact] = field(default_factory=dict)
    syntax_iters: int = 0
    functional_iters: int = 0


@dataclass(frozen=True)
class IterationRecord:
    index: int
    loop: str  # syntax | functional
    signal_before: str
    files_changed: tuple[str, ...]
    signal_after: str
    transcript_refs: tuple[str, ...]


@dataclass(frozen=True)
class PipelineResult:
    verdict: str  # verified | budget_exhausted | agent_failure | environment_failure
    final_artifacts: tuple[GeneratedArtifact, ...]
    iterations: tuple[IterationRecord, ...]
    csv_path: Path | None = None
    report_path: Path | None = None
    vcd_path: Path | None = None
    run_json_path: Path | None = None
    detail: str = ""


def _truncate_tail(text: str, budget: int = STDERR_BUDGET_BYTES) -> str:
    raw = text.encode("utf-8")
    if len(raw) <= budget:
        return text
    kept = raw[-budget:].decode("utf-8", "replace")
    banner = TRUNCATION_BANNER.format(kept=budget, total=len(raw))
    return banner + "\n" + kept


def package_syntax_context(state: PipelineState, compile_outcome: SimOutcome) -> DebugContext:
    """Bundle the compiler diagnostics with both current sources."""
    stderr = compile_outcome.stderr
    if not stderr.strip():
        stderr = (
            f"(compiler produced no diagnostics; exited with code {compile_outcome.exit_code})"
        )
    return DebugContext(
        variant="syntax",
        sources=tuple(state.artifacts.values()),
        error_log=_truncate_tail(stderr),
    )


def _downsample_csv(text: str, row_budget: int = CSV_ROW_BUDGET) -> str:
    lines = text.splitlines()
    if len(lines) <= 1:
        return text
    header, rows = lines[0], lines[1:]
    if len(rows) <= row_budget:
        return text
    # uniform index selection, always keeping the first and last rows
    picked = []
    seen = set()
    for i in range(row_budget):
        idx = round(i * (len(rows) - 1) / (row_budget - 1))
        if idx not in seen:
            seen.add(idx)
            picked.append(rows[idx])
    return "\n".join([header] + picked) + "\n"


def package_functional_context(
    state: PipelineState,
    run_outcome: SimOutcome,
    report_text: str | None,
    csv_text: str | None,
) -> DebugContext:
    """Bundle simulation evidence (CSV, report, spec IR) with the sources.

    A crash that produced no CSV or report substitutes the runtime stderr
    with a marker note, so the agent always receives all evidence slots.
    """
    if csv_text is None:
        csv_text = (
            "(no CSV log was produced; runtime stderr follows)\n" + run_outcome.stderr
        )
    else:
        csv_text = _downsample_csv(csv_text)
    if report_text is None:
        report_text = (
            "(no verification report was produced; runtime stderr follows)\n"
            + run_outcome.stderr
        )
    return DebugContext(
        variant="functional",
        sources=tuple(state.artifacts.values()),
        csv_text=csv_text,
        report_text=report_text,
        spec_ir=state.spec,
    )


def _build_gateway(cfg: PipelineConfig, transcript_path: str | None, transcript_mode: str | None) -> Gateway:
    if transcript_path and transcript_mode in ("replay", "scripted"):
        return Gateway.from_transcript(transcript_path, transcript_mode)
    if transcript_path and transcript_mode == "record":
        from .gateway import Transcript

        return Gateway.live(cfg.provider, transcript=Transcript(transcript_path, "record"))
    return Gateway.live(cfg.provider)


def _attempt(
    state: PipelineState,
    cfg: PipelineConfig,
    run_root: Path,
    attempt_index: int,
):
    """Materialize, compile, maybe simulate, classify. Returns the evidence."""
    ws = toolchain.materialize_workspace(
        list(state.artifacts.values()), run_root=run_root, attempt=attempt_index
    )
    state.stage = "building"
    compile_oc = toolchain.compile_workspace(ws, cfg.toolchain)
    run_oc = None
    report = None
    report_text = None
    csv_text = None
    if compile_oc.status == "ok":
        state.stage = "simulating"
        run_oc = toolchain.simulate(ws, cfg.toolchain)
        if ws.report_path and ws.report_path.exists():
            report_text = ws.report_path.read_text(encoding="utf-8")
            try:
                report = verdicts.parse_report(report_text)
            except verdicts.VerdictError as e:
                log.warning("attempt %d: unparseable report: %s", attempt_index, e)
        if ws.csv_path and ws.csv_path.exists():
            csv_text = ws.csv_path.read_text(encoding="utf-8")
    signal = toolchain.classify(compile_oc, run_oc, report)
    return ws, compile_oc, run_oc, report_text, csv_text, signal


def run_pipeline(
    datasheet_path: str | Path,
    template_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path = "ds2sc-out",
    transcript_path: str | None = None,
    transcript_mode: str | None = None,
) -> PipelineResult:
    """Drive the full state machine and write the run manifest.

    Environment problems (unreadable inputs, missing compiler, unreachable
    provider, transcript misses) end the run with environment_failure;
    persistent agent contract violations end it with agent_failure;
    exhausted repair budgets end it with budget_exhausted.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_root = out_dir / "attempts"

    try:
        raw = Path(datasheet_path).read_text(encoding="utf-8")
        template_text = Path(template_path).read_text(encoding="utf-8")
    except OSError as e:
        return _finish(out_dir, "environment_failure", (), [], detail=str(e))
    try:
        tpl = spec_ir.parse_template(template_text)
    except spec_ir.SpecIrError as e:
        return _finish(out_dir, "environment_failure", (), [], detail=f"template: {e}")

    gw = _build_gateway(cfg, transcript_path, transcript_mode)
    state = PipelineState()
    iterations: list[IterationRecord] = []
    signals_log: list[dict] = []

    fmt = cfg.datasheet_format
    if str(datasheet_path).endswith(".txt"):
        fmt = "plain_text"
    ds = ingest.ingest_text(raw, fmt)
    ds = ingest.denoise(ds, cfg.datasheet_domain or tpl.domain.value)

    try:
        state.stage = "parsing"
        state.spec = agents.run_spec_parsing(
            ds, tpl, gw, cfg.agent_configs["spec_parsing"], char_budget=cfg.char_budget
        )
        state.stage = "generating"
        header = agents.run_code_generation(
            state.spec, gw, cfg.agent_configs["code_gen"], header_name=cfg.header_name
        )
        state.artifacts[header.file_name] = header
        state.stage = "tb_generating"
        tb = agents.run_testbench_generation(
            state.spec, header, gw, cfg.agent_configs["tb_gen"], testbench_name=cfg.testbench_name
        )
        state.artifacts[tb.file_name] = tb
    except agents.AgentError as e:
        state.stage = "failed"
        return _finish(out_dir, "agent_failure", tuple(state.artifacts.values()), iterations, detail=str(e))
    except GatewayError as e:
        state.stage = "failed"
        return _finish(
            out_dir, "environment_failure", tuple(state.artifacts.values()), iterations, detail=str(e)
        )

    attempt_index = 0
    last_ws = None
    pending: tuple[str, str, int, tuple[str, ...], list[str]] | None = None
    # (loop, signal_before, iteration index, files changed, transcript refs)

    try:
        while True:
            ws, compile_oc, run_oc, report_text, csv_text, signal = _attempt(
                state, cfg, run_root, attempt_index
            )
            last_ws = ws
            signals_log.append(
                {
                    "attempt": attempt_index,
                    "compile_status": compile_oc.status,
                    "run_status": run_oc.status if run_oc else None,
                    "signal": signal.value,
                    "duration_ms": compile_oc.duration_ms + (run_oc.duration_ms if run_oc else 0),
                }
            )
            attempt_index += 1
            if pending is not None:
                loop, before, index, files, refs = pending
                iterations.append(
                    IterationRecord(
                        index=index,
                        loop=loop,
                        signal_before=before,
                        files_changed=files,
                        signal_after=signal.value,
                        transcript_refs=tuple(refs),
                    )
                )
                pending = None

            if signal is PipelineSignal.ok:
                state.stage = "done"
                return _finish(
                    out_dir,
                    "verified",
                    tuple(state.artifacts.values()),
                    iterations,
                    signals_log=signals_log,
                    ws=ws,
                    gw=gw,
                )

            if signal is PipelineSignal.syntax_fail:
                if state.syntax_iters >= cfg.max_syntax_iters:
                    state.stage = "failed"
                    return _finish(
                        out_dir,
                        "budget_exhausted",
                        tuple(state.artifacts.values()),
                        iterations,
                        signals_log=signals_log,
                        ws=ws,
                        gw=gw,
                        detail=f"syntax budget ({cfg.max_syntax_iters}) exhausted",
                    )
                state.stage = "syntax_repair"
                ctx = package_syntax_context(state, compile_oc)
                loop = "syntax"
                state.syntax_iters += 1
                index = state.syntax_iters
            else:  # functional_fail, runtime_fail, timeout
                if state.functional_iters >= cfg.max_functional_iters:
                    state.stage = "failed"
                    return _finish(
                        out_dir,
                        "budget_exhausted",
                        tuple(state.artifacts.values()),
                        iterations,
                        signals_log=signals_log,
                        ws=ws,
                        gw=gw,
                        detail=f"functional budget ({cfg.max_functional_iters}) exhausted",
                    )
                state.stage = "functional_repair"
                ctx = package_functional_context(state, run_oc or compile_oc, report_text, csv_text)
                loop = "functional"
                state.functional_iters += 1
                index = state.functional_iters

            mark = len(gw.exchanges)
            fixed = agents.run_debugging(ctx, gw, cfg.agent_configs["debug"])
            refs = gw.digests_since(mark)
            for artifact in fixed:
                state.artifacts[artifact.file_name] = artifact
            pending = (loop, signal.value, index, tuple(a.file_name for a in fixed), refs)
    except agents.AgentError as e:
        state.stage = "failed"
        return _finish(
            out_dir,
            "agent_failure",
            tuple(state.artifacts.values()),
            iterations,
            signals_log=signals_log,
            ws=last_ws,
            gw=gw,
            detail=str(e),
        )
    except (ToolchainEnvironmentError, GatewayError) as e:
        state.stage = "failed"
        return _finish(
            out_dir,
            "environment_failure",
            tuple(state.artifacts.values()),
            iterations,
            signals_log=signals_log,
            ws=last_ws,
            gw=gw,
            detail=str(e),
        )


def _finish(
    out_dir: Path,
    verdict: str,
    final_artifacts: tuple[GeneratedArtifact, ...],
    iterations: list[IterationRecord],
    signals_log: list[dict] | None = None,
    ws=None,
    gw: Gateway | None = None,
    detail: str = "",
) -> PipelineResult:
    manifest = {
        "verdict": verdict,
        "detail": detail,
        "signals": signals_log or [],
        "iterations": [
            {
                "index": it.index,
                "loop": it.loop,
                "signal_before": it.signal_before,
                "files_changed": list(it.files_changed),
                "signal_after": it.signal_after,
                "transcript_refs": list(it.transcript_refs),
            }
            for it in iterations
        ],
        "artifact_revisions": {a.file_name: a.revision for a in final_artifacts},
        "transcript_digests": [d for d, _, _ in (gw.exchanges if gw else [])],
        "llm_elapsed_ms": sum(r.elapsed_ms for _, _, r in (gw.exchanges if gw else [])),
    }
    run_json = out_dir / "run.json"
    run_json.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    for artifact in final_artifacts:
        (out_dir / artifact.file_name).write_text(artifact.content, encoding="utf-8")

    return PipelineResult(
        verdict=verdict,
        final_artifacts=final_artifacts,
        iterations=tuple(iterations),
        csv_path=getattr(ws, "csv_path", None),
        report_path=getattr(ws, "report_path", None),
        vcd_path=getattr(ws, "vcd_path", None),
        run_json_path=run_json,
        detail=detail,
    )
