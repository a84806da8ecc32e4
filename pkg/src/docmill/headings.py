"""Section header detection: document outline metadata first, then a
textual table of contents parsed with regular expressions, then font-size
ranking as the last resort. Tiers never mix within one document."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from docmill.layout import Block, BodyStats, Line, _half_point
from docmill.model import RawDocument

MAX_LEVEL = 6
# a metadata outline is trusted when at least half its entries match a block
METADATA_MIN_MATCH_RATE = 0.5
# textual ToC detection scans this many leading pages for a run of
# at least TOC_MIN_RUN consecutive entry-shaped lines
TOC_SCAN_PAGES = 10
TOC_MIN_RUN = 4
# indentation clusters round x0 to this granularity (points)
TOC_INDENT_GRANULARITY = 5.0
# font-size fallback: candidate when above body by this margin, or bold
# and short at body size
FONT_SIZE_MARGIN = 0.5
BOLD_HEADING_MAX_WORDS = 12

# "1", "1.", "1.1", "1.1.a" (digit-led) or "A.", "A.1" (letter-led; a bare
# letter is a word, not numbering)
_NUMBER_PATTERN = (
    r"(?:\d+(?:\.(?:\d+|[A-Za-z]))*\.?"
    r"|[A-Za-z]\.(?:(?:\d+|[A-Za-z])(?:\.(?:\d+|[A-Za-z]))*\.?)?)"
)
_NUMBERING = re.compile(rf"^\s*({_NUMBER_PATTERN})(?=\s|$)")
_TOC_LINE = re.compile(
    rf"^\s*(?:(?P<number>{_NUMBER_PATTERN})\s+)?"
    r"(?P<title>\S.*?)"
    r"[\s.·․]*"
    r"(?P<page>\d{1,4})\s*$"
)
_WS = re.compile(r"\s+")
_TRAILING_PAGE = re.compile(r"[\s.·․]*\d{1,4}\s*$")


class HeadingSource(Enum):
    METADATA_TOC = "metadata_toc"
    PARSED_TOC = "parsed_toc"
    FONT_SIZE = "font_size"


@dataclass(frozen=True)
class Heading:
    text: str
    level: int
    block_ref: int
    source: HeadingSource


def normalize_for_match(text: str) -> str:
    """Case-folded, whitespace-collapsed, numbering/leaders stripped."""
    text = _TRAILING_PAGE.sub("", text)
    m = _NUMBERING.match(text)
    if m:
        text = text[m.end() :]
    return _WS.sub(" ", text).strip().casefold()


def infer_numbering_level(title: str) -> int | None:
    """Depth of a leading numbering prefix: '1.'->1, '1.1'->2, '1.1.a'->3."""
    m = _NUMBERING.match(title)
    if m is None:
        return None
    prefix = m.group(1).rstrip(".")
    return prefix.count(".") + 1


def _block_position(blocks: list[Block], index: int) -> tuple[int, float]:
    block = blocks[index]
    return (block.page_index, block.bbox.y0)


def headings_from_metadata(
    doc: RawDocument, blocks: list[Block]
) -> list[Heading] | None:
    """Match outline entries to blocks near their target page."""
    if not doc.metadata_toc:
        return None
    normalized_blocks = [
        (i, normalize_for_match(b.text), b.page_index) for i, b in enumerate(blocks)
    ]
    matches: list[tuple[int, Heading]] = []
    used: set[int] = set()
    for entry in doc.metadata_toc:
        wanted = normalize_for_match(entry.title)
        if not wanted:
            continue
        found = None
        for i, text, page in normalized_blocks:
            if i in used or text != wanted:
                continue
            if abs(page - entry.page_index) <= 1:
                found = i
                break
        if found is not None:
            used.add(found)
            matches.append(
                (
                    found,
                    Heading(
                        text=blocks[found].text,
                        level=min(max(entry.level, 1), MAX_LEVEL),
                        block_ref=found,
                        source=HeadingSource.METADATA_TOC,
                    ),
                )
            )
    if len(matches) * 2 < len(doc.metadata_toc):
        return None
    matches.sort(key=lambda m: _block_position(blocks, m[0]))
    return [h for _, h in matches]


@dataclass(frozen=True)
class _TocEntry:
    title: str
    number: str | None
    x0: float
    block_index: int


def _toc_runs(blocks: list[Block]) -> list[list[_TocEntry]]:
    """Maximal runs of consecutive ToC-shaped lines in the leading pages."""
    lines: list[tuple[int, Line]] = [
        (i, line)
        for i, block in enumerate(blocks)
        if block.page_index < TOC_SCAN_PAGES
        for line in block.lines
    ]
    runs: list[list[_TocEntry]] = []
    current: list[_TocEntry] = []
    for block_index, line in lines:
        m = _TOC_LINE.match(line.text)
        entry = None
        if m and m.group("title"):
            title = m.group("title").strip(" .·․")
            if title:
                entry = _TocEntry(
                    title=title,
                    number=m.group("number"),
                    x0=line.bbox.x0,
                    block_index=block_index,
                )
        if entry is not None:
            current.append(entry)
        else:
            if len(current) >= TOC_MIN_RUN:
                runs.append(current)
            current = []
    if len(current) >= TOC_MIN_RUN:
        runs.append(current)
    return runs


def _levels_for_run(run: list[_TocEntry]) -> list[int]:
    if all(entry.number for entry in run):
        return [
            min(infer_numbering_level(entry.number or "") or 1, MAX_LEVEL)
            for entry in run
        ]
    # indentation clusters: deeper levels sit further right
    buckets = sorted(
        {round(entry.x0 / TOC_INDENT_GRANULARITY) for entry in run}
    )
    level_of = {bucket: min(i + 1, MAX_LEVEL) for i, bucket in enumerate(buckets)}
    return [level_of[round(entry.x0 / TOC_INDENT_GRANULARITY)] for entry in run]


def detect_textual_toc(blocks: list[Block]) -> list[Heading] | None:
    """Parse an in-document ToC and anchor its entries to body blocks."""
    runs = _toc_runs(blocks)
    if not runs:
        return None
    run = max(runs, key=len)
    levels = _levels_for_run(run)
    toc_blocks = {entry.block_index for entry in run}

    normalized_blocks = [normalize_for_match(b.text) for b in blocks]
    headings: list[tuple[int, Heading]] = []
    used: set[int] = set()
    for entry, level in zip(run, levels):
        wanted = normalize_for_match(entry.title)
        if not wanted:
            continue
        anchor = next(
            (
                i
                for i, text in enumerate(normalized_blocks)
                if i not in used and i not in toc_blocks and text == wanted
            ),
            None,
        )
        if anchor is None:
            continue
        used.add(anchor)
        headings.append(
            (
                anchor,
                Heading(
                    text=blocks[anchor].text,
                    level=level,
                    block_ref=anchor,
                    source=HeadingSource.PARSED_TOC,
                ),
            )
        )
    if not headings:
        return None
    headings.sort(key=lambda h: _block_position(blocks, h[0]))
    return [h for _, h in headings]


def headings_from_font_size(blocks: list[Block], stats: BodyStats) -> list[Heading]:
    """Rank above-body font sizes into heading levels, largest first."""
    candidates: list[tuple[int, float]] = []
    for i, block in enumerate(blocks):
        size = block.dominant_font_size()
        above_body = size > stats.body_font_size + FONT_SIZE_MARGIN
        bold_short = (
            block.is_mostly_bold()
            and block.word_count() <= BOLD_HEADING_MAX_WORDS
            and size >= stats.body_font_size
        )
        if above_body or bold_short:
            candidates.append((i, _half_point(size)))
    distinct = sorted({size for _, size in candidates}, reverse=True)
    level_of = {size: min(rank + 1, MAX_LEVEL) for rank, size in enumerate(distinct)}
    return [
        Heading(
            text=blocks[i].text,
            level=level_of[size],
            block_ref=i,
            source=HeadingSource.FONT_SIZE,
        )
        for i, size in candidates
    ]


def resolve_headings(
    doc: RawDocument, blocks: list[Block], stats: BodyStats
) -> list[Heading]:
    """First non-empty tier wins: metadata, parsed ToC, then font size."""
    for tier in (
        lambda: headings_from_metadata(doc, blocks),
        lambda: detect_textual_toc(blocks),
    ):
        result = tier()
        if result:
            return result
    return headings_from_font_size(blocks, stats)
