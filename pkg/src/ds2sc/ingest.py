"""Datasheet text ingestion: sectioning, noise removal, context chunking.

Input is text already extracted from a datasheet (``.txt`` or ``.md``);
PDF conversion is an upstream external step. Ingestion is lossless: every
character of the source lands in exactly one section heading or body, so
sections concatenate back to the original text. Page breaks (a form-feed
line or ``--- page N ---``) stay in the body text but advance the page
hint of subsequent sections.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace

__all__ = [
    "Datasheet",
    "Section",
    "Chunk",
    "NoiseConfig",
    "IngestError",
    "ingest_text",
    "denoise",
    "chunk",
]

log = logging.getLogger(__name__)

MD_HEADING_RE = re.compile(r"^#{1,6}\s+\S")
NUMBERED_HEADING_RE = re.compile(r"^\d+(\.\d+)*[.)]?\s+\S")
PAGE_MARKER_RE = re.compile(r"^---\s*page\s+(\d+)\s*---\s*$", re.IGNORECASE)

TABLE_SEPARATOR = "|"

DEFAULT_CHAR_BUDGET = 400_000
MIN_CHAR_BUDGET = 1024


class IngestError(ValueError):
    """Bad datasheet input or an unusable chunk budget."""


@dataclass(frozen=True)
class Section:
    heading: str  # original heading line including markers and newline; "" for preamble
    body: str
    page_hint: int | None = None
    noise_class: str | None = None  # packaging | manufacturing | timing_setup_hold | none

    @property
    def text(self) -> str:
        return self.heading + self.body

    @property
    def heading_title(self) -> str:
        return self.heading.lstrip("#").strip()


@dataclass(frozen=True)
class Datasheet:
    title: str
    sections: tuple[Section, ...]
    source_format: str  # plain_text | markdown

    @property
    def text(self) -> str:
        return "".join(s.text for s in self.sections)


@dataclass(frozen=True)
class Chunk:
    index: int
    text: str
    char_budget: int


@dataclass(frozen=True)
class NoiseConfig:
    """Heading keywords that classify a section as datasheet noise."""

    packaging: tuple[str, ...] = (
        "package",
        "packaging",
        "mechanical",
        "outline",
        "dimensions",
        "marking",
        "moisture",
        "solder",
        "tape and reel",
        "land pattern",
    )
    manufacturing: tuple[str, ...] = (
        "manufacturing",
        "fabrication",
        "assembly",
        "ordering information",
        "ordering guide",
        "qualification",
        "reliability",
    )
    timing_setup_hold: tuple[str, ...] = (
        "setup and hold",
        "setup/hold",
        "setup time",
        "hold time",
    )

    def classify(self, heading_title: str) -> str:
        h = heading_title.lower()
        for kw in self.packaging:
            if kw in h:
                return "packaging"
        for kw in self.manufacturing:
            if kw in h:
                return "manufacturing"
        for kw in self.timing_setup_hold:
            if kw in h:
                return "timing_setup_hold"
        return "none"


def _is_heading(line: str, fmt: str) -> bool:
    if fmt == "markdown":
        return MD_HEADING_RE.match(line) is not None
    stripped = line.strip()
    if not stripped or len(stripped) > 100:
        return False
    if NUMBERED_HEADING_RE.match(stripped):
        return True
    letters = [c for c in stripped if c.isalpha()]
    return len(letters) >= 3 and stripped == stripped.upper()


def ingest_text(raw: str, source_format: str = "markdown") -> Datasheet:
    """Split extracted datasheet text into sections at heading boundaries.

    Markdown splits at ``#`` headings; plain text uses an ALL-CAPS or
    numbered-heading heuristic. Text before the first heading becomes a
    preamble section with an empty heading.
    """
    if source_format not in ("plain_text", "markdown"):
        raise IngestError(f"unknown source format {source_format!r}")
    if not raw:
        raise IngestError("empty datasheet input")

    lines = raw.splitlines(keepends=True)
    sections: list[Section] = []
    heading = ""
    body_parts: list[str] = []
    page = 1
    section_page: int | None = None
    saw_marker = False

    def flush():
        if heading or body_parts:
            sections.append(
                Section(
                    heading=heading,
                    body="".join(body_parts),
                    page_hint=section_page if saw_marker else None,
                )
            )

    for line in lines:
        if _is_heading(line, source_format):
            flush()
            heading = line
            body_parts = []
            section_page = page
        else:
            body_parts.append(line)
            if "\f" in line or PAGE_MARKER_RE.match(line.strip()):
                m = PAGE_MARKER_RE.match(line.strip())
                page = int(m.group(1)) + 1 if m else page + 1
                saw_marker = True
    flush()

    if not sections:
        sections.append(Section(heading="", body=raw, page_hint=None))

    title = ""
    for s in sections:
        if s.heading:
            title = s.heading_title
            break
    return Datasheet(title=title, sections=tuple(sections), source_format=source_format)


def denoise(ds: Datasheet, domain: str = "digital", config: NoiseConfig | None = None) -> Datasheet:
    """Drop packaging, manufacturing, and setup/hold-timing sections.

    Classification is by heading keyword lists (configurable); removed
    sections are logged with their class. The domain is recorded with the
    log lines but the default keyword lists apply to all domains.
    """
    cfg = config or NoiseConfig()
    kept: list[Section] = []
    for s in ds.sections:
        cls = cfg.classify(s.heading_title) if s.heading else "none"
        if cls == "none":
            kept.append(replace(s, noise_class="none"))
        else:
            log.info("denoise[%s]: dropping section %r (%s)", domain, s.heading_title, cls)
    return Datasheet(title=ds.title, sections=tuple(kept), source_format=ds.source_format)


def chunk(ds: Datasheet, char_budget: int = DEFAULT_CHAR_BUDGET) -> list[Chunk]:
    """Greedy-pack whole sections into chunks of at most char_budget chars.

    A section longer than the budget is split at line boundaries, so no
    single line (and hence no table row) is ever split across chunks;
    concatenating the chunks reproduces the datasheet text exactly.
    """
    if char_budget < MIN_CHAR_BUDGET:
        raise IngestError(f"char_budget must be >= {MIN_CHAR_BUDGET}, got {char_budget}")

    pieces: list[str] = []
    current = ""

    def flush():
        nonlocal current
        if current:
            pieces.append(current)
            current = ""

    for s in ds.sections:
        text = s.text
        if len(current) + len(text) <= char_budget:
            current += text
            continue
        flush()
        if len(text) <= char_budget:
            current = text
            continue
        for line in text.splitlines(keepends=True):
            if len(line) > char_budget:
                raise IngestError(
                    f"char_budget {char_budget} too small for a {len(line)}-char line"
                )
            if len(current) + len(line) > char_budget:
                flush()
            current += line
    flush()

    return [Chunk(index=i, text=t, char_budget=char_budget) for i, t in enumerate(pieces)]
