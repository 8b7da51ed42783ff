"""Mixed-fill spec IR: template parsing, anti-tamper validation, scenarios.

The spec IR file is UTF-8 JSON with a top-level ``domain`` plus exactly four
zone objects::

    {
      "domain": "digital" | "analog" | "rf",
      "global_config":   {"zone_kind": "prefilled",  ...},
      "interface_params": {"zone_kind": "extraction", ...},
      "behavioral_logic": {"zone_kind": "extraction", ...},
      "test_cases":      {"zone_kind": "prefilled",  ...}
    }

Extraction zones hold ``<FILL:name>`` anchors (the full leaf string must
match the anchor grammar); pre-filled zones may not contain any. A filled
document must be structurally identical to its template everywhere except
at anchor leaves, where any scalar is accepted and the literal string
"null" means "feature absent in the datasheet".

Hints: a string key ``<k>_hint`` next to an anchor key ``<k>`` documents
units/meaning for the fill; hints are themselves pre-filled leaves.

List-fill: an array whose single element is an anchor may be replaced by an
array of any length in the filled document (pin lists have unknown length
at template time).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

__all__ = [
    "Domain",
    "ZoneKind",
    "FillAnchor",
    "SpecIrTemplate",
    "SpecIrDocument",
    "TestScenario",
    "ExpectedCheck",
    "Finding",
    "ValidationReport",
    "SpecIrError",
    "parse_template",
    "validate_filled",
    "test_scenarios",
    "serialize",
]

ANCHOR_RE = re.compile(r"^<FILL:([A-Za-z0-9_.\-]+)>$")
ANCHOR_TAG = "<FILL:"

ZONE_KINDS = {
    "global_config": "prefilled",
    "interface_params": "extraction",
    "behavioral_logic": "extraction",
    "test_cases": "prefilled",
}
ZONE_ORDER = ("global_config", "interface_params", "behavioral_logic", "test_cases")
DOMAINS = ("digital", "analog", "rf")


class Domain(str, Enum):
    digital = "digital"
    analog = "analog"
    rf = "rf"


class ZoneKind(str, Enum):
    prefilled = "prefilled"
    extraction = "extraction"


class SpecIrError(ValueError):
    """Template or document violates the spec IR contract."""


@dataclass(frozen=True)
class FillAnchor:
    """One extraction anchor: where it lives, what it is called, optional hint."""

    path: tuple
    name: str
    hint: str | None = None


@dataclass(frozen=True)
class SpecIrTemplate:
    domain: Domain
    root: dict
    anchors: tuple[FillAnchor, ...]

    def zones(self) -> dict[str, ZoneKind]:
        return {z: ZoneKind(ZONE_KINDS[z]) for z in ZONE_ORDER}

    def anchor_paths(self) -> set[tuple]:
        return {a.path for a in self.anchors}


@dataclass(frozen=True)
class SpecIrDocument:
    template_id: str
    domain: Domain
    root: dict
    provenance: str = "manual"  # manual | agent | replay


@dataclass(frozen=True)
class ExpectedCheck:
    """One verifiable expectation; every check carries an explicit tolerance."""

    check: str
    value: float
    tolerance: float
    units: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TestScenario:
    name: str
    domain: Domain
    stimulus: dict
    expected: tuple[ExpectedCheck, ...]


@dataclass(frozen=True)
class Finding:
    severity: str  # tamper | unfilled | structural | grammar
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    BLOCKING = ("tamper", "unfilled", "structural")

    @property
    def verdict(self) -> str:
        if any(f.severity in self.BLOCKING for f in self.findings):
            return "violations"
        return "valid"

    @property
    def valid(self) -> bool:
        return self.verdict == "valid"

    def by_severity(self, severity: str) -> list[Finding]:
        return [f for f in self.findings if f.severity == severity]


def _path_str(path: tuple) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _walk_leaves(node: Any, path: tuple = ()) -> Iterator[tuple[tuple, Any]]:
    """Yield (path, value) for every leaf in document order."""
    if isinstance(node, dict):
        for k, v in node.items():
            yield from _walk_leaves(v, path + (k,))
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from _walk_leaves(v, path + (i,))
    else:
        yield path, node


def _is_list_fill(node: Any) -> bool:
    return (
        isinstance(node, list)
        and len(node) == 1
        and isinstance(node[0], str)
        and ANCHOR_RE.match(node[0]) is not None
    )


def _lookup(root: Any, path: tuple) -> Any:
    node = root
    for p in path:
        node = node[p]
    return node


def parse_template(text: str) -> SpecIrTemplate:
    """Parse and structurally validate a mixed-fill template.

    Raises SpecIrError on JSON syntax errors (with position), anchor-grammar
    violations (a leaf contains the fill tag but does not fully match), and
    zone errors (wrong zone partition, anchors in a pre-filled zone, an
    extraction zone with no anchors).
    """
    try:
        root = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecIrError(f"syntax error at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(root, dict):
        raise SpecIrError("template root must be a JSON object")

    expected_keys = {"domain", *ZONE_ORDER}
    got_keys = set(root.keys())
    if got_keys != expected_keys:
        missing = expected_keys - got_keys
        extra = got_keys - expected_keys
        raise SpecIrError(
            f"zone error: top level must hold exactly domain plus the four zones"
            f"{'; missing ' + ', '.join(sorted(missing)) if missing else ''}"
            f"{'; unexpected ' + ', '.join(sorted(extra)) if extra else ''}"
        )
    domain = root["domain"]
    if domain not in DOMAINS:
        raise SpecIrError(f"unknown domain {domain!r}; expected one of {DOMAINS}")

    for zone in ZONE_ORDER:
        z = root[zone]
        if not isinstance(z, dict):
            raise SpecIrError(f"zone error: {zone} must be an object")
        kind = z.get("zone_kind")
        if kind != ZONE_KINDS[zone]:
            raise SpecIrError(
                f"zone error: {zone} must declare zone_kind={ZONE_KINDS[zone]!r}, got {kind!r}"
            )

    anchors: list[FillAnchor] = []
    for path, value in _walk_leaves(root):
        if not isinstance(value, str) or ANCHOR_TAG not in value:
            continue
        m = ANCHOR_RE.match(value)
        if m is None:
            raise SpecIrError(
                f"anchor grammar error at {_path_str(path)}: {value!r} contains "
                f"{ANCHOR_TAG!r} but does not fully match <FILL:name>"
            )
        zone = path[0]
        if ZONE_KINDS.get(zone) == "prefilled":
            raise SpecIrError(
                f"zone error: pre-filled zone {zone} contains anchor at {_path_str(path)}"
            )
        hint = None
        if len(path) >= 1 and isinstance(path[-1], str):
            parent = _lookup(root, path[:-1])
            h = parent.get(f"{path[-1]}_hint")
            if isinstance(h, str):
                hint = h
        anchors.append(FillAnchor(path=path, name=m.group(1), hint=hint))

    anchored_zones = {a.path[0] for a in anchors}
    for zone, kind in ZONE_KINDS.items():
        if kind == "extraction" and zone not in anchored_zones:
            raise SpecIrError(f"zone error: extraction zone {zone} contains no anchors")

    return SpecIrTemplate(domain=Domain(domain), root=root, anchors=tuple(anchors))


def serialize(obj: SpecIrTemplate | SpecIrDocument) -> str:
    """Canonical UTF-8 JSON rendering of a template or document tree."""
    return json.dumps(obj.root, indent=2, ensure_ascii=False) + "\n"


def _diff(tpl_node: Any, cand_node: Any, path: tuple, findings: list[Finding]) -> None:
    p = _path_str(path)

    if isinstance(tpl_node, str) and ANCHOR_RE.match(tpl_node):
        if cand_node is None:
            findings.append(
                Finding("grammar", p, "anchor filled with JSON null; use the string \"null\"")
            )
        elif isinstance(cand_node, (dict, list)):
            findings.append(Finding("structural", p, "anchor expects a scalar fill"))
        elif isinstance(cand_node, str) and cand_node == tpl_node:
            findings.append(Finding("unfilled", p, f"anchor {tpl_node} not filled"))
        elif isinstance(cand_node, str) and ANCHOR_TAG in cand_node:
            findings.append(Finding("unfilled", p, f"fill tag left inside value {cand_node!r}"))
        return

    if isinstance(tpl_node, dict):
        if not isinstance(cand_node, dict):
            findings.append(Finding("structural", p, "expected object"))
            return
        for k in tpl_node:
            if k not in cand_node:
                findings.append(Finding("tamper", f"{p}.{k}", f"key {k!r} deleted or renamed"))
            else:
                _diff(tpl_node[k], cand_node[k], path + (k,), findings)
        for k in cand_node:
            if k not in tpl_node:
                findings.append(Finding("tamper", f"{p}.{k}", f"key {k!r} added or renamed"))
        return

    if isinstance(tpl_node, list):
        if not isinstance(cand_node, list):
            findings.append(Finding("structural", p, "expected array"))
            return
        if _is_list_fill(tpl_node):
            if len(cand_node) == 1 and cand_node[0] == tpl_node[0]:
                findings.append(Finding("unfilled", p, f"list anchor {tpl_node[0]} not filled"))
                return
            for sub_path, leaf in _walk_leaves(cand_node, path):
                if isinstance(leaf, str) and ANCHOR_TAG in leaf:
                    findings.append(
                        Finding("unfilled", _path_str(sub_path), f"fill tag left in list fill: {leaf!r}")
                    )
            return
        if len(tpl_node) != len(cand_node):
            findings.append(
                Finding(
                    "structural",
                    p,
                    f"array length changed from {len(tpl_node)} to {len(cand_node)}",
                )
            )
            return
        for i, (t, c) in enumerate(zip(tpl_node, cand_node)):
            _diff(t, c, path + (i,), findings)
        return

    # pre-filled leaf: must match exactly
    if cand_node != tpl_node or isinstance(cand_node, bool) != isinstance(tpl_node, bool):
        findings.append(
            Finding("tamper", p, f"pre-filled value changed from {tpl_node!r} to {cand_node!r}")
        )


def validate_filled(template: SpecIrTemplate, candidate_text: str) -> ValidationReport:
    """Anti-tamper structural diff of a candidate document against its template.

    Every key rename/add/delete and every changed pre-filled leaf is a
    tamper finding; container shape changes are structural; anchors left
    unfilled (or half-filled with the tag still present) are unfilled
    findings; JSON-null fills are grammar findings. Problems are always
    reported as findings, never raised.
    """
    findings: list[Finding] = []
    try:
        cand = json.loads(candidate_text)
    except json.JSONDecodeError as e:
        findings.append(
            Finding("grammar", "$", f"candidate is not valid JSON: {e.msg} at line {e.lineno}")
        )
        findings.append(Finding("structural", "$", "structure cannot be verified"))
        return ValidationReport(tuple(findings))
    if not isinstance(cand, dict):
        findings.append(Finding("structural", "$", "candidate root must be an object"))
        return ValidationReport(tuple(findings))
    _diff(template.root, cand, (), findings)
    return ValidationReport(tuple(findings))


def build_document(
    template: SpecIrTemplate,
    candidate_text: str,
    provenance: str = "manual",
    template_id: str = "",
) -> SpecIrDocument:
    """Construct a SpecIrDocument from validated candidate text.

    Raises SpecIrError if the candidate does not validate. JSON-null fills
    are normalized to the literal string "null".
    """
    report = validate_filled(template, candidate_text)
    if not report.valid:
        raise SpecIrError(
            "candidate does not validate: "
            + "; ".join(f"{f.severity}@{f.path}: {f.message}" for f in report.findings[:5])
        )
    root = json.loads(candidate_text)
    for anchor in template.anchors:
        parent = _lookup(root, anchor.path[:-1])
        if parent[anchor.path[-1]] is None:
            parent[anchor.path[-1]] = "null"
    return SpecIrDocument(
        template_id=template_id,
        domain=template.domain,
        root=root,
        provenance=provenance,
    )


_UNIT_SUFFIXES = {
    # suffix -> (canonical suffix, multiplier into canonical units)
    "_mv": ("_v", 1e-3),
    "_uv": ("_v", 1e-6),
    "_us": ("_ns", 1e3),
    "_ms": ("_ns", 1e6),
    "_s": ("_ns", 1e9),
    "_khz": ("_hz", 1e3),
    "_mhz": ("_hz", 1e6),
    "_ghz": ("_hz", 1e9),
}


def _normalize_units(obj: Any) -> Any:
    """Rewrite unit-suffixed numeric keys into canonical units (V, ns, Hz)."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            for suffix, (canon, mult) in _UNIT_SUFFIXES.items():
                if k.endswith(suffix) and isinstance(v, (int, float)) and not isinstance(v, bool):
                    out[k[: -len(suffix)] + canon] = v * mult
                    break
            else:
                out[k] = _normalize_units(v)
        return out
    if isinstance(obj, list):
        return [_normalize_units(v) for v in obj]
    return obj


def _as_number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise SpecIrError(f"{where}: expected a number, got {v!r}")
    try:
        return float(v)
    except ValueError:
        raise SpecIrError(f"{where}: expected a number, got {v!r}") from None


def test_scenarios(doc: SpecIrDocument) -> list[TestScenario]:
    """Extract the pre-set simulation scenarios from the test_cases zone.

    Scenarios come back in template order with unit-suffixed fields
    normalized. Each expected entry must carry an explicit numeric
    tolerance; windowed stimuli must have increasing, non-overlapping
    time windows.
    """
    zone = doc.root.get("test_cases")
    if not isinstance(zone, dict) or "scenarios" not in zone:
        raise SpecIrError("missing test_cases zone or its scenarios list")
    raw = zone["scenarios"]
    if not isinstance(raw, list):
        raise SpecIrError("test_cases.scenarios must be an array")

    out: list[TestScenario] = []
    for idx, sc in enumerate(raw):
        where = f"scenario[{idx}]"
        if not isinstance(sc, dict):
            raise SpecIrError(f"{where}: must be an object")
        name = sc.get("name")
        if not isinstance(name, str) or not name:
            raise SpecIrError(f"{where}: missing name")
        domain = sc.get("domain", doc.domain.value)
        if domain not in DOMAINS:
            raise SpecIrError(f"{where}: unknown domain {domain!r}")
        stimulus = sc.get("stimulus")
        if not isinstance(stimulus, dict) or "kind" not in stimulus:
            raise SpecIrError(f"{where}: malformed stimulus (object with a kind required)")
        stimulus = _normalize_units(stimulus)

        segments = stimulus.get("segments")
        if segments is not None:
            if not isinstance(segments, list) or not segments:
                raise SpecIrError(f"{where}: segments must be a non-empty array")
            prev_end = None
            for seg in segments:
                t0 = _as_number(seg.get("t_start_ns"), f"{where} segment t_start_ns")
                t1 = _as_number(seg.get("t_end_ns"), f"{where} segment t_end_ns")
                if t1 <= t0:
                    raise SpecIrError(f"{where}: segment window [{t0}, {t1}] is not increasing")
                if prev_end is not None and t0 < prev_end:
                    raise SpecIrError(f"{where}: segment windows overlap at t={t0}")
                prev_end = t1

        expected_raw = sc.get("expected")
        if not isinstance(expected_raw, list) or not expected_raw:
            raise SpecIrError(f"{where}: expected must be a non-empty array of checks")
        checks: list[ExpectedCheck] = []
        for c in expected_raw:
            if not isinstance(c, dict) or "check" not in c:
                raise SpecIrError(f"{where}: malformed expected entry {c!r}")
            if "tolerance" not in c:
                raise SpecIrError(f"{where}: check {c.get('check')!r} missing a tolerance")
            c = _normalize_units(c)
            checks.append(
                ExpectedCheck(
                    check=str(c["check"]),
                    value=_as_number(c.get("value", 0.0), f"{where} value"),
                    tolerance=_as_number(c["tolerance"], f"{where} tolerance"),
                    units=str(c.get("units", "abs")),
                    params={
                        k: v
                        for k, v in c.items()
                        if k not in ("check", "value", "tolerance", "units")
                    },
                )
            )
        out.append(
            TestScenario(
                name=name,
                domain=Domain(domain),
                stimulus=stimulus,
                expected=tuple(checks),
            )
        )
    return out
