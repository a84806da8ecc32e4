"""Markdown serialization of layout results, with line-to-page provenance.

Paragraph blocks are recombined onto single lines (hyphenated line breaks
rejoined), headings become ATX headings, bound links become markdown
links, and tables render as pipe tables. Every non-blank output line maps
back to the page range it came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from docmill.errors import RangeOutOfBounds
from docmill.headings import Heading
from docmill.layout import Block, Line
from docmill.model import Span
from docmill.tables import Grid, TableCell, render_table

# spans closer than this (points) concatenate without an inserted space
TIGHT_JOIN_GAP = 0.5


@dataclass(frozen=True)
class PlacedTable:
    """A reconstructed table ready for emission in document order."""

    grid: Grid
    cells: list[TableCell]


@dataclass
class MarkdownDoc:
    """Markdown text plus provenance: line number -> (start_page, end_page)."""

    text: str
    line_pages: dict[int, tuple[int, int]] = field(default_factory=dict)
    main_title: str | None = None

    @classmethod
    def from_text(cls, text: str, main_title: str | None = None) -> "MarkdownDoc":
        return cls(text=text, line_pages={}, main_title=main_title)

    @property
    def lines(self) -> list[str]:
        return self.text.split("\n")


def _decorate(text: str, bold: bool, italic: bool, uri: str | None) -> str:
    if text.strip():
        if bold and italic:
            text = f"***{text}***"
        elif bold:
            text = f"**{text}**"
        elif italic:
            text = f"*{text}*"
    if uri:
        text = f"[{text}]({uri})"
    return text


def _render_line(line: Line) -> str:
    """Spans joined with gap-aware spacing; same-style neighbours merge."""
    runs: list[tuple[str, bool, bool, str | None]] = []
    prev: Span | None = None
    for span in line.spans:
        tight = (
            prev is not None and span.bbox.x0 - prev.bbox.x1 <= TIGHT_JOIN_GAP
        )
        same_style = (
            runs
            and tight
            and runs[-1][1:] == (span.bold, span.italic, span.uri)
        )
        if same_style:
            text, bold, italic, uri = runs[-1]
            runs[-1] = (text + span.text, bold, italic, uri)
        else:
            text = span.text if (tight or prev is None) else " " + span.text
            runs.append((text, span.bold, span.italic, span.uri))
        prev = span
    out = []
    for text, bold, italic, uri in runs:
        lead = ""
        if text.startswith(" "):
            lead, text = " ", text[1:]
        out.append(lead + _decorate(text, bold, italic, uri))
    return "".join(out)


def _recombine(block: Block) -> str:
    """Join block lines with spaces, repairing hyphenated line breaks."""
    joined = ""
    for line in block.lines:
        rendered = _render_line(line)
        if not joined:
            joined = rendered
            continue
        raw_next = line.text.lstrip()
        if (
            joined.endswith("-")
            and not joined.endswith("--")
            and raw_next[:1].islower()
        ):
            joined = joined[:-1] + rendered
        else:
            joined = joined + " " + rendered
    return joined


def emit(
    blocks: list[Block],
    headings: list[Heading],
    tables: list[PlacedTable],
    main_title: str | None,
) -> MarkdownDoc:
    """Serialize blocks, headings and tables into one markdown document."""
    heading_for: dict[int, Heading] = {}
    for heading in headings:
        heading_for.setdefault(heading.block_ref, heading)
    level_shift = 1 if main_title else 0

    items: list[tuple[tuple[int, float, float], int, object]] = []
    for index, block in enumerate(blocks):
        key = (block.page_index, block.bbox.y0, block.bbox.x0)
        items.append((key, index, block))
    for table in tables:
        key = (table.grid.page_index, table.grid.ys[0], table.grid.xs[0])
        items.append((key, -1, table))
    items.sort(key=lambda item: item[0])

    out_lines: list[str] = []
    line_pages: dict[int, tuple[int, int]] = {}

    def push(text: str, page: int) -> None:
        for piece in text.split("\n"):
            if piece.strip():
                line_pages[len(out_lines)] = (page, page)
            out_lines.append(piece)

    def gap() -> None:
        if out_lines and out_lines[-1] != "":
            out_lines.append("")

    if main_title:
        push(f"# {main_title}", 0)

    for key, index, payload in items:
        gap()
        if isinstance(payload, PlacedTable):
            push(render_table(payload.cells, payload.grid), payload.grid.page_index)
            continue
        block = payload
        assert isinstance(block, Block)
        heading = heading_for.get(index)
        if heading is not None:
            level = min(heading.level + level_shift, 6)
            push("#" * level + " " + block.text, block.page_index)
        else:
            push(_recombine(block), block.page_index)

    return MarkdownDoc(
        text="\n".join(out_lines),
        line_pages=line_pages,
        main_title=main_title,
    )


def page_range(
    md: MarkdownDoc, line_start: int, line_end: int
) -> tuple[int, int] | None:
    """(min start_page, max end_page) over the mapped lines in a range.

    Blank lines inherit the nearest preceding mapped line. Returns None
    when no line in the range has any provenance (plain-text sources).
    """
    total = len(md.lines)
    if not (0 <= line_start <= line_end < total):
        raise RangeOutOfBounds(f"lines [{line_start}, {line_end}] outside 0..{total - 1}")
    if not md.line_pages:
        return None
    start_page: int | None = None
    end_page: int | None = None

    def effective(line: int) -> tuple[int, int] | None:
        for candidate in range(line, -1, -1):
            hit = md.line_pages.get(candidate)
            if hit is not None:
                return hit
        return None

    for line in range(line_start, line_end + 1):
        hit = md.line_pages.get(line)
        if hit is None:
            continue
        start_page = hit[0] if start_page is None else min(start_page, hit[0])
        end_page = hit[1] if end_page is None else max(end_page, hit[1])
    if start_page is None:
        hit = effective(line_end)
        if hit is None:
            return None
        return hit
    assert end_page is not None
    return (start_page, end_page)
