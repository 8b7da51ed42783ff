"""The four agent behaviors: prompt assembly, invocation, output linting.

Each agent renders a prompt bundle of four labeled instruction sections
(shipped as text files under ``prompts/``) plus the dynamic inputs for this
run, calls the gateway, and checks the response against its output
contract. Contract violations are fed back verbatim into a bounded retry
loop; what survives is either a validated spec IR document or a lint-clean
code artifact.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources

from .artifacts import ArtifactError, GeneratedArtifact, extract_artifacts
from .gateway import Gateway, LlmRequest, SanitizeError, sanitize_structured
from .ingest import Datasheet, chunk as chunk_datasheet
from .spec_ir import (
    SpecIrDocument,
    SpecIrTemplate,
    ValidationReport,
    build_document,
    serialize,
    validate_filled,
)

__all__ = [
    "AgentConfig",
    "PromptBundle",
    "DebugContext",
    "LintFinding",
    "AgentError",
    "AgentContractError",
    "DEFAULT_TEMPERATURES",
    "SECTION_LABELS",
    "build_prompt",
    "run_spec_parsing",
    "run_code_generation",
    "run_testbench_generation",
    "run_debugging",
    "lint_artifact",
]

DEFAULT_TEMPERATURES = {
    "spec_parsing": 0.2,
    "code_gen": 0.4,
    "tb_gen": 0.4,
    "debug": 0.3,
}

SECTION_LABELS = {
    "spec_parsing": (
        "Role Definition & Task Assignment",
        "Strict Boundary Constraints",
        "Denoising",
        "Output Format Construction",
    ),
    "code_gen": (
        "Role Definition & Task Isolation",
        "Architecture & Interface Synthesis",
        "Event-Driven Behavioral Threading",
        "Header-Only Output Constraint",
    ),
    "tb_gen": (
        "Role Definition & Black-Box Assembly",
        "Stimulus Synthesis & Dynamic Synchronization",
        "Simulation Data Logging & Report Generation",
        "Top-Level Execution Constraint",
    ),
    "debug": (
        "Role Definition & Dynamic Inputs",
        "Error Evidence",
        "Chain-of-Thought Reasoning",
        "Mandatory Output Constraints",
    ),
}

DEFAULT_HEADER_NAME = "chiplet_core.h"
DEFAULT_TESTBENCH_NAME = "main.cpp"


class AgentError(RuntimeError):
    """Agent could not produce a contract-conforming output."""


class AgentContractError(AgentError):
    """Contract violations persisted through every retry."""

    def __init__(self, message: str, report: ValidationReport | None = None, findings=None):
        super().__init__(message)
        self.report = report
        self.findings = list(findings or [])


@dataclass(frozen=True)
class AgentConfig:
    kind: str
    temperature: float
    max_retries_on_contract_violation: int = 2

    @classmethod
    def default(cls, kind: str) -> "AgentConfig":
        return cls(kind=kind, temperature=DEFAULT_TEMPERATURES[kind])


def default_agent_configs() -> dict[str, AgentConfig]:
    return {kind: AgentConfig.default(kind) for kind in DEFAULT_TEMPERATURES}


@dataclass(frozen=True)
class PromptBundle:
    """Ordered labeled sections; the leading n_system sections are the system prompt."""

    sections: tuple[tuple[str, str], ...]
    n_system: int

    @property
    def rendered(self) -> str:
        return "\n\n".join(f"### {label}\n{text}" for label, text in self.sections)

    @property
    def system_text(self) -> str:
        return "\n\n".join(f"### {label}\n{text}" for label, text in self.sections[: self.n_system])

    @property
    def user_text(self) -> str:
        return "\n\n".join(f"### {label}\n{text}" for label, text in self.sections[self.n_system :])


@dataclass(frozen=True)
class DebugContext:
    """Evidence bundle for the debugging agent.

    The syntax variant carries the compiler log; the functional variant
    carries simulation CSV, verification report, and the spec IR.
    """

    variant: str  # syntax | functional
    sources: tuple[GeneratedArtifact, ...]
    error_log: str | None = None
    csv_text: str | None = None
    report_text: str | None = None
    spec_ir: SpecIrDocument | None = None

    def __post_init__(self):
        if self.variant == "syntax":
            if self.error_log is None:
                raise ValueError("syntax debug context requires error_log")
        elif self.variant == "functional":
            missing = [
                n
                for n, v in (
                    ("csv_text", self.csv_text),
                    ("report_text", self.report_text),
                    ("spec_ir", self.spec_ir),
                )
                if v is None
            ]
            if missing:
                raise ValueError(f"functional debug context missing {', '.join(missing)}")
        else:
            raise ValueError(f"unknown debug variant {self.variant!r}")
        if not self.sources:
            raise ValueError("debug context needs at least one source artifact")


@dataclass(frozen=True)
class LintFinding:
    severity: str  # fatal | warn
    code: str
    message: str
    location: int | None = None


def _load_instruction_sections(kind: str, subs: dict[str, str]) -> list[tuple[str, str]]:
    text = resources.files("ds2sc.prompts").joinpath(f"{kind}.txt").read_text(encoding="utf-8")
    for key, value in subs.items():
        text = text.replace("{{" + key + "}}", value)
    if "{{" in text:
        leftover = re.search(r"\{\{[a-z_]+\}\}", text)
        raise AgentError(f"unresolved prompt placeholder {leftover.group(0) if leftover else ''}")
    sections: list[tuple[str, str]] = []
    label = None
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("### "):
            if label is not None:
                sections.append((label, "\n".join(body).strip()))
            label = line[4:].strip()
            body = []
        else:
            body.append(line)
    if label is not None:
        sections.append((label, "\n".join(body).strip()))
    return sections


def _render_sources(sources) -> str:
    parts = []
    for src in sources:
        parts.append(f"--- {src.file_name} (revision {src.revision}) ---\n{src.content}")
    return "\n\n".join(parts)


def build_prompt(
    kind: str,
    inputs: dict,
    header_name: str = DEFAULT_HEADER_NAME,
    testbench_name: str = DEFAULT_TESTBENCH_NAME,
) -> PromptBundle:
    """Assemble the prompt bundle for an agent kind.

    ``inputs`` is kind-specific: template/datasheet for spec_parsing, the
    spec document for code_gen, spec + header for tb_gen, a DebugContext
    for debug. An optional ``violations`` string is appended verbatim for
    contract-violation retries.
    """
    if kind not in SECTION_LABELS:
        raise AgentError(f"unknown agent kind {kind!r}")
    prompt_file = "debug" if kind == "debug" else kind
    subs = {"header_name": header_name, "testbench_name": testbench_name}

    user_sections: list[tuple[str, str]] = []
    if kind == "spec_parsing":
        for want in ("template_json", "datasheet_text"):
            if want not in inputs:
                raise AgentError(f"spec_parsing prompt missing input {want!r}")
        user_sections.append(("Template", inputs["template_json"]))
        user_sections.append(("Datasheet", inputs["datasheet_text"]))
    elif kind == "code_gen":
        if "spec_json" not in inputs:
            raise AgentError("code_gen prompt missing input 'spec_json'")
        user_sections.append(("Specification", inputs["spec_json"]))
    elif kind == "tb_gen":
        for want in ("spec_json", "header_content"):
            if want not in inputs:
                raise AgentError(f"tb_gen prompt missing input {want!r}")
        user_sections.append(("Specification", inputs["spec_json"]))
        user_sections.append(("DUT Header", inputs["header_content"]))
    else:  # debug
        ctx = inputs.get("context")
        if not isinstance(ctx, DebugContext):
            raise AgentError("debug prompt missing input 'context'")
        evidence: list[str] = []
        if ctx.variant == "syntax":
            evidence.append(f"Compiler output:\n{ctx.error_log}")
        else:
            evidence.append(f"Simulation data (.csv):\n{ctx.csv_text}")
            evidence.append(f"Verification report (.txt):\n{ctx.report_text}")
            evidence.append(f"Specification (JSON):\n{serialize(ctx.spec_ir)}")

        instruction = _load_instruction_sections(prompt_file, subs)
        labels = SECTION_LABELS["debug"]
        sections = [
            (labels[0], instruction[0][1]),
            (labels[1], "\n\n".join(evidence)),
            (labels[2], instruction[1][1]),
            (labels[3], instruction[2][1]),
        ]
        user_sections.append(("Source Files", _render_sources(ctx.sources)))
        if inputs.get("violations"):
            user_sections.append(("Violations To Fix", inputs["violations"]))
        return PromptBundle(sections=tuple(sections + user_sections), n_system=4)

    sections = _load_instruction_sections(prompt_file, subs)
    if inputs.get("violations"):
        user_sections.append(("Violations To Fix", inputs["violations"]))
    return PromptBundle(sections=tuple(sections + user_sections), n_system=len(sections))


def _request(bundle: PromptBundle, cfg: AgentConfig) -> LlmRequest:
    return LlmRequest(
        system_prompt=bundle.system_text,
        user_payload=bundle.user_text,
        temperature=cfg.temperature,
        agent_kind=cfg.kind,
    )


def _render_findings(report: ValidationReport) -> str:
    return "\n".join(f"{f.severity} at {f.path}: {f.message}" for f in report.findings)


def _fill_sites(tpl: SpecIrTemplate) -> list[tuple[tuple, str]]:
    """Fill sites of a template: (path, anchor string) per fillable location.

    A list-fill anchor's site is the enclosing single-element array; a
    scalar anchor's site is the leaf itself.
    """
    sites = []
    for anchor in tpl.anchors:
        parent = tpl.root
        for p in anchor.path[:-1]:
            parent = parent[p]
        tag = f"<FILL:{anchor.name}>"
        if isinstance(parent, list) and len(parent) == 1:
            sites.append((anchor.path[:-1], tag))
        else:
            sites.append((anchor.path, tag))
    return sites


def _site_value(tree, path: tuple):
    node = tree
    for p in path:
        try:
            node = node[p]
        except (KeyError, IndexError, TypeError):
            return None, False
    return node, True


def _site_filled(value, tag: str) -> bool:
    if value == tag or value == [tag]:
        return False
    return not (isinstance(value, str) and "<FILL:" in value)


def run_spec_parsing(
    ds: Datasheet,
    tpl: SpecIrTemplate,
    gw: Gateway,
    cfg: AgentConfig,
    char_budget: int | None = None,
    merge_policy: str = "first_wins",
) -> SpecIrDocument:
    """Fill the template from the datasheet and validate the result.

    One-shot by default; when ``char_budget`` is given and the datasheet is
    larger, chunks are fed sequentially and fills are merged across chunks
    (first_wins: a later chunk may only fill anchors still unfilled).
    Contract violations are re-prompted with the findings appended
    verbatim, up to the configured retry budget.
    """
    if char_budget is not None and len(ds.text) > char_budget:
        chunks = [c.text for c in chunk_datasheet(ds, char_budget)]
    else:
        chunks = [ds.text]
    one_shot = len(chunks) == 1

    sites = _fill_sites(tpl)
    fills: dict[tuple, object] = {}

    def merged_text() -> str:
        root = copy.deepcopy(tpl.root)
        for path, value in fills.items():
            node = root
            for p in path[:-1]:
                node = node[p]
            node[path[-1]] = copy.deepcopy(value)
        return json.dumps(root, indent=2, ensure_ascii=False) + "\n"

    last_report: ValidationReport | None = None
    for chunk_text in chunks:
        violations = ""
        for _attempt in range(cfg.max_retries_on_contract_violation + 1):
            bundle = build_prompt(
                "spec_parsing",
                {
                    "template_json": merged_text(),
                    "datasheet_text": chunk_text,
                    "violations": violations,
                },
            )
            response = gw.complete(_request(bundle, cfg))
            try:
                tree = sanitize_structured(response.text)
            except SanitizeError as e:
                violations = f"grammar at $: {e}"
                last_report = None
                continue
            candidate_text = json.dumps(tree, indent=2, ensure_ascii=False) + "\n"
            report = validate_filled(tpl, candidate_text)
            last_report = report
            if one_shot:
                blocking = not report.valid
            else:
                blocking = bool(
                    [f for f in report.findings if f.severity in ("tamper", "structural")]
                )
            if blocking:
                violations = _render_findings(report)
                continue
            if one_shot:
                return build_document(tpl, candidate_text, provenance="agent")
            for path, tag in sites:
                value, found = _site_value(tree, path)
                if not found or not _site_filled(value, tag):
                    continue
                if value is None:
                    value = "null"
                if path not in fills or merge_policy == "last_wins":
                    fills[path] = value
            break
        else:
            raise AgentContractError(
                f"spec parsing violated the template contract after "
                f"{cfg.max_retries_on_contract_violation + 1} attempts",
                report=last_report,
            )

    final_text = merged_text()
    final_report = validate_filled(tpl, final_text)
    if not final_report.valid:
        raise AgentContractError(
            "spec parsing left violations after all chunks", report=final_report
        )
    return build_document(tpl, final_text, provenance="agent")


def lint_artifact(
    a: GeneratedArtifact,
    kind: str | None = None,
    header_name: str = DEFAULT_HEADER_NAME,
) -> list[LintFinding]:
    """Deterministic token-level contract checks; never mutates the artifact.

    These are cheap pre-compile gates for the prompt contracts; the real
    syntactic authority is the compiler.
    """
    kind = kind or a.kind
    findings: list[LintFinding] = []
    content = a.content
    if kind == "model_header":
        m = re.search(r"\bsc_main\b", content)
        if m:
            line = content[: m.start()].count("\n") + 1
            findings.append(
                LintFinding("fatal", "tb_in_model", "model header defines or references sc_main", line)
            )
        if re.search(r"\bint\s+main\s*\(", content):
            findings.append(LintFinding("warn", "main_in_model", "model header defines main()"))
    elif kind == "testbench_main":
        if not re.search(r"\bsc_main\b", content):
            findings.append(
                LintFinding("fatal", "missing_entry_point", "testbench defines no sc_main entry point")
            )
        include_re = re.compile(r"#\s*include\s*[\"<][^\">]*" + re.escape(header_name) + r"[\">]")
        if not include_re.search(content):
            findings.append(
                LintFinding(
                    "fatal", "missing_dut_include", f"testbench does not #include {header_name}"
                )
            )
        if ".csv" not in content:
            findings.append(
                LintFinding("fatal", "missing_logging", "testbench references no .csv log path")
            )
        if ".txt" not in content:
            findings.append(
                LintFinding("fatal", "missing_report", "testbench references no .txt report path")
            )
    return findings


def _render_lint(findings: list[LintFinding]) -> str:
    return "\n".join(
        f"{f.severity} {f.code}: {f.message}" + (f" (line {f.location})" if f.location else "")
        for f in findings
    )


def _generation_loop(
    kind: str,
    inputs: dict,
    gw: Gateway,
    cfg: AgentConfig,
    expected_name: str,
    expected_kind: str,
    origin: str,
    header_name: str,
    testbench_name: str,
) -> GeneratedArtifact:
    violations = ""
    last_problem = ""
    for attempt in range(cfg.max_retries_on_contract_violation + 1):
        bundle = build_prompt(
            kind,
            {**inputs, "violations": violations},
            header_name=header_name,
            testbench_name=testbench_name,
        )
        response = gw.complete(_request(bundle, cfg))
        try:
            artifacts = extract_artifacts(response.text, expected={expected_name}, origin=origin)
        except ArtifactError as e:
            last_problem = str(e)
            violations = f"output contract violation: {e}"
            continue
        if len(artifacts) != 1:
            last_problem = f"unexpected_file_count: got {len(artifacts)} files, expected 1"
            violations = last_problem
            continue
        artifact = artifacts[0]
        if artifact.kind != expected_kind:
            last_problem = f"wrong artifact kind {artifact.kind}, expected {expected_kind}"
            violations = last_problem
            continue
        lints = lint_artifact(artifact, header_name=header_name)
        fatal = [f for f in lints if f.severity == "fatal"]
        if fatal:
            last_problem = _render_lint(fatal)
            violations = f"lint violations:\n{last_problem}"
            continue
        return artifact
    raise AgentContractError(
        f"{kind} violated its output contract after "
        f"{cfg.max_retries_on_contract_violation + 1} attempts: {last_problem}",
        findings=[last_problem],
    )


def run_code_generation(
    spec: SpecIrDocument,
    gw: Gateway,
    cfg: AgentConfig,
    header_name: str = DEFAULT_HEADER_NAME,
) -> GeneratedArtifact:
    """Generate the self-contained model header from the spec document."""
    spec_json = json.dumps(spec.root, indent=2, ensure_ascii=False)
    return _generation_loop(
        "code_gen",
        {"spec_json": spec_json},
        gw,
        cfg,
        expected_name=header_name,
        expected_kind="model_header",
        origin="code_gen",
        header_name=header_name,
        testbench_name=DEFAULT_TESTBENCH_NAME,
    )


def run_testbench_generation(
    spec: SpecIrDocument,
    header: GeneratedArtifact,
    gw: Gateway,
    cfg: AgentConfig,
    testbench_name: str = DEFAULT_TESTBENCH_NAME,
) -> GeneratedArtifact:
    """Generate the executable black-box testbench for a lint-clean header."""
    if any(f.severity == "fatal" for f in lint_artifact(header)):
        raise AgentError("refusing to build a testbench for a lint-dirty header")
    spec_json = json.dumps(spec.root, indent=2, ensure_ascii=False)
    return _generation_loop(
        "tb_gen",
        {"spec_json": spec_json, "header_content": header.content},
        gw,
        cfg,
        expected_name=testbench_name,
        expected_kind="testbench_main",
        origin="tb_gen",
        header_name=header.file_name,
        testbench_name=testbench_name,
    )


def run_debugging(
    ctx: DebugContext,
    gw: Gateway,
    cfg: AgentConfig,
) -> list[GeneratedArtifact]:
    """Obtain repaired full files for one or both sources in the context.

    Each returned artifact replaces the same-named source at revision + 1
    and must pass its kind's lints.
    """
    expected = {src.file_name for src in ctx.sources}
    revisions = {src.file_name: src.revision + 1 for src in ctx.sources}
    by_kind = {src.file_name: src.kind for src in ctx.sources}
    header_name = next(
        (src.file_name for src in ctx.sources if src.kind == "model_header"),
        DEFAULT_HEADER_NAME,
    )
    tb_name = next(
        (src.file_name for src in ctx.sources if src.kind == "testbench_main"),
        DEFAULT_TESTBENCH_NAME,
    )

    violations = ""
    last_problem = ""
    for attempt in range(cfg.max_retries_on_contract_violation + 1):
        bundle = build_prompt(
            "debug",
            {"context": ctx, "violations": violations},
            header_name=header_name,
            testbench_name=tb_name,
        )
        response = gw.complete(_request(bundle, cfg))
        try:
            artifacts = extract_artifacts(
                response.text, expected=expected, origin="debug", revisions=revisions
            )
        except ArtifactError as e:
            last_problem = str(e)
            violations = f"output contract violation: {e}"
            continue
        if len(artifacts) > 2:
            last_problem = f"too many files repaired: {len(artifacts)}"
            violations = last_problem
            continue
        fatal_msgs = []
        for artifact in artifacts:
            lints = lint_artifact(artifact, kind=by_kind[artifact.file_name], header_name=header_name)
            fatal_msgs.extend(f for f in lints if f.severity == "fatal")
        if fatal_msgs:
            last_problem = _render_lint(fatal_msgs)
            violations = f"lint violations:\n{last_problem}"
            continue
        return artifacts
    raise AgentContractError(
        f"debugging violated its output contract after "
        f"{cfg.max_retries_on_contract_violation + 1} attempts: {last_problem}",
        findings=[last_problem],
    )
