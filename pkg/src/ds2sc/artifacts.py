"""Full-file code artifact extraction from model output.

Code arrives inside triple-backtick fenced blocks whose first line is a
file marker comment::

    ```cpp
    // === FILE: chiplet_core.h ===
    ...full file content...
    ```

The marker grammar is anchored and whitespace-exact by default (automation
needs determinism); a lenient mode tolerating extra whitespace exists
behind a flag. Partial outputs are rejected: a body line of ``...`` or
``// ...``, or any line containing "rest of file unchanged", is treated as
an elision and fails extraction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "GeneratedArtifact",
    "CodeBlock",
    "ArtifactError",
    "extract_code_blocks",
    "parse_file_marker",
    "extract_artifacts",
    "render_artifact",
    "artifact_kind",
]

FILE_MARKER_RE = re.compile(r"^// === FILE: (\S+) ===$")
LENIENT_MARKER_RE = re.compile(r"^//\s*===\s*FILE\s*:\s*(\S+)\s*===\s*$")
ATTEMPTED_MARKER_RE = re.compile(r"^\s*//.*FILE\s*:", re.IGNORECASE)
ELISION_SENTINEL = "rest of file unchanged"


class ArtifactError(ValueError):
    """Model output violates the full-file artifact contract."""


def artifact_kind(file_name: str) -> str:
    if file_name == "main.cpp" or file_name.endswith("/main.cpp"):
        return "testbench_main"
    if file_name.endswith(".h"):
        return "model_header"
    return "other"


def _check_file_name(name: str) -> None:
    if not name:
        raise ArtifactError("empty file name in marker")
    if name.startswith(("/", "\\")) or re.match(r"^[A-Za-z]:", name):
        raise ArtifactError(f"absolute path not allowed in marker: {name!r}")
    parts = re.split(r"[/\\]", name)
    if any(p in ("", "..") for p in parts):
        raise ArtifactError(f"illegal file name in marker: {name!r}")


@dataclass(frozen=True)
class GeneratedArtifact:
    """One complete generated source file with its revision lineage."""

    file_name: str
    content: str
    revision: int = 0
    origin: str = "fixture"  # code_gen | tb_gen | debug | fixture

    def __post_init__(self):
        if not self.content:
            raise ArtifactError(f"artifact {self.file_name!r} has empty content")
        _check_file_name(self.file_name)
        if self.revision < 0:
            raise ArtifactError("revision must be >= 0")

    @property
    def kind(self) -> str:
        return artifact_kind(self.file_name)

    def bumped(self, content: str, origin: str = "debug") -> "GeneratedArtifact":
        return GeneratedArtifact(
            file_name=self.file_name,
            content=content,
            revision=self.revision + 1,
            origin=origin,
        )


@dataclass(frozen=True)
class CodeBlock:
    language_tag: str
    body: str
    start_line: int
    unterminated: bool = False


def extract_code_blocks(text: str) -> list[CodeBlock]:
    """All triple-backtick fenced blocks, in order.

    Fences are recognised only at line start, so backticks inside a block
    body are plain text. An unterminated final fence yields one block
    running to end-of-text, flagged unterminated.
    """
    blocks: list[CodeBlock] = []
    lines = text.splitlines()
    in_block = False
    tag = ""
    body: list[str] = []
    start = 0
    for i, line in enumerate(lines, start=1):
        if not in_block:
            if line.startswith("```"):
                in_block = True
                tag = line[3:].strip()
                body = []
                start = i
        else:
            if line.startswith("```"):
                blocks.append(CodeBlock(tag, "\n".join(body), start))
                in_block = False
            else:
                body.append(line)
    if in_block:
        blocks.append(CodeBlock(tag, "\n".join(body), start, unterminated=True))
    return blocks


def parse_file_marker(block: CodeBlock, lenient: bool = False) -> tuple[str, str]:
    """Split a code block into (file name, file content) at its marker line.

    The first non-blank line must be exactly ``// === FILE: <name> ===``;
    lenient mode tolerates extra whitespace around the tokens.
    """
    lines = block.body.split("\n")
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx == len(lines):
        raise ArtifactError("empty code block, no file marker")
    marker_line = lines[idx].rstrip("\r")
    pattern = LENIENT_MARKER_RE if lenient else FILE_MARKER_RE
    m = pattern.match(marker_line)
    if m is None:
        raise ArtifactError(f"malformed file marker: {marker_line!r}")
    name = m.group(1)
    _check_file_name(name)
    return name, "\n".join(lines[idx + 1 :])


def _scan_full_file(name: str, content: str) -> None:
    for line in content.split("\n"):
        stripped = line.strip()
        if stripped in ("...", "// ...", "//..."):
            raise ArtifactError(f"partial_file: elision line {stripped!r} in {name}")
        if ELISION_SENTINEL in line.lower():
            raise ArtifactError(f"partial_file: {ELISION_SENTINEL!r} sentinel in {name}")


def extract_artifacts(
    text: str,
    expected: set[str] | None = None,
    origin: str = "fixture",
    revisions: dict[str, int] | None = None,
    lenient: bool = False,
) -> list[GeneratedArtifact]:
    """Extract every marked full-file artifact from model output, in order.

    Blocks whose first line does not attempt a file marker are ignored as
    prose; blocks that attempt one but miss the grammar are errors. With
    ``expected`` given, every extracted name must be a member. ``revisions``
    maps file names to the revision each extracted artifact should carry.
    """
    artifacts: list[GeneratedArtifact] = []
    seen: set[str] = set()
    for block in extract_code_blocks(text):
        first = next((ln for ln in block.body.split("\n") if ln.strip()), "")
        strict_hit = FILE_MARKER_RE.match(first.rstrip("\r"))
        lenient_hit = LENIENT_MARKER_RE.match(first.rstrip("\r"))
        attempted = ATTEMPTED_MARKER_RE.match(first) or first.lstrip().startswith("// ===")
        if not (strict_hit or lenient_hit or attempted):
            continue
        name, content = parse_file_marker(block, lenient=lenient)
        if name in seen:
            raise ArtifactError(f"duplicate file name in output: {name}")
        seen.add(name)
        if expected is not None and name not in expected:
            raise ArtifactError(f"unexpected file name {name!r}; expected one of {sorted(expected)}")
        _scan_full_file(name, content)
        if not content.strip():
            raise ArtifactError(f"artifact {name!r} has empty content")
        revision = (revisions or {}).get(name, 0)
        artifacts.append(
            GeneratedArtifact(file_name=name, content=content, revision=revision, origin=origin)
        )
    if not artifacts:
        raise ArtifactError("no file-marked code blocks found in output")
    return artifacts


def render_artifact(a: GeneratedArtifact, language_tag: str = "cpp") -> str:
    """Inverse of extraction: fence + marker + content + fence."""
    return f"```{language_tag}\n// === FILE: {a.file_name} ===\n{a.content}\n```\n"
