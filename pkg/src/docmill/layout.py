"""Layout heuristics: repeated header/footer removal, line and block
assembly from document spacing statistics, link binding and main-title
inference. All functions are pure."""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum

from docmill.errors import EmptyDocumentError
from docmill.model import RawDocument, Rect, Span

# documents shorter than this keep everything; the "signature on more
# than a third of pages" rule degenerates on 1-2 page documents
HEADER_FOOTER_MIN_PAGES = 3
# spans merge into one line when their baselines differ by at most
# LINE_MERGE_FACTOR x the smaller font size of the pair
LINE_MERGE_FACTOR = 0.3
# consecutive lines join a block when their baseline gap is at most
# BLOCK_GAP_FACTOR x the document's modal body line spacing
BLOCK_GAP_FACTOR = 1.5
# a link binds to a span when it covers at least this share of its area
LINK_BIND_MIN_OVERLAP = 0.5

_DIGITS = re.compile(r"\d")
_WS = re.compile(r"\s+")


class BlockKind(Enum):
    PARAGRAPH = "paragraph"
    HEADING_CANDIDATE = "heading_candidate"
    TABLE_REGION = "table_region"
    OTHER = "other"


@dataclass(frozen=True)
class Line:
    """Spans sharing one baseline, ordered left to right."""

    spans: tuple[Span, ...]
    bbox: Rect
    page_index: int

    @property
    def baseline(self) -> float:
        return self.bbox.y1

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.spans)

    def dominant_font_size(self) -> float:
        weights: Counter[float] = Counter()
        for span in self.spans:
            weights[_half_point(span.font_size)] += max(len(span.text), 1)
        # ties resolve to the smaller size
        best = max(weights.items(), key=lambda kv: (kv[1], -kv[0]))
        return best[0]


@dataclass(frozen=True)
class Block:
    """Vertically grouped lines approximating a paragraph or heading."""

    lines: tuple[Line, ...]
    bbox: Rect
    page_index: int
    kind: BlockKind = BlockKind.PARAGRAPH

    @property
    def text(self) -> str:
        return " ".join(line.text for line in self.lines)

    def dominant_font_size(self) -> float:
        weights: Counter[float] = Counter()
        for line in self.lines:
            for span in line.spans:
                weights[_half_point(span.font_size)] += max(len(span.text), 1)
        best = max(weights.items(), key=lambda kv: (kv[1], -kv[0]))
        return best[0]

    def max_font_size(self) -> float:
        return max(s.font_size for line in self.lines for s in line.spans)

    def is_mostly_bold(self) -> bool:
        bold = sum(len(s.text) for line in self.lines for s in line.spans if s.bold)
        total = sum(len(s.text) for line in self.lines for s in line.spans)
        return total > 0 and bold * 2 >= total

    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class BodyStats:
    """Dominant font size and modal line spacing of running text."""

    body_font_size: float
    body_line_spacing: float
    page_count: int


def _half_point(value: float) -> float:
    return round(value * 2.0) / 2.0


def position_signature(span: Span) -> tuple[int, int, int, int, str]:
    """Rounded geometry plus digit-masked text; 'Page 3' matches 'Page 4'."""
    text = _WS.sub(" ", _DIGITS.sub("#", span.text)).strip().casefold()
    b = span.bbox
    return (round(b.x0), round(b.y0), round(b.x1), round(b.y1), text)


def remove_headers_footers(doc: RawDocument) -> RawDocument:
    """Drop spans whose position signature recurs on > 1/3 of pages."""
    if doc.page_count < HEADER_FOOTER_MIN_PAGES:
        return doc
    pages_with: dict[tuple, set[int]] = defaultdict(set)
    for span in doc.spans:
        pages_with[position_signature(span)].add(span.page_index)
    # integer comparison: count/pages > 1/3 without float edge cases
    kept = tuple(
        s for s in doc.spans if len(pages_with[position_signature(s)]) * 3 <= doc.page_count
    )
    return doc.with_spans(kept)


def estimate_body_stats(
    doc: RawDocument, merge_factor: float = LINE_MERGE_FACTOR
) -> BodyStats:
    """Character-weighted modal font size and modal body line spacing."""
    if not doc.spans:
        raise EmptyDocumentError("no spans to estimate body statistics from")
    weights: Counter[float] = Counter()
    for span in doc.spans:
        weights[_half_point(span.font_size)] += len(span.text)
    body_size = max(weights.items(), key=lambda kv: (kv[1], -kv[0]))[0]

    gaps: Counter[float] = Counter()
    lines = assemble_lines(doc, merge_factor=merge_factor)
    by_page: dict[int, list[Line]] = defaultdict(list)
    for line in lines:
        if line.dominant_font_size() == body_size:
            by_page[line.page_index].append(line)
    for page_lines in by_page.values():
        page_lines.sort(key=lambda l: l.baseline)
        for prev, cur in zip(page_lines, page_lines[1:]):
            gap = _half_point(cur.baseline - prev.baseline)
            if gap > 0:
                gaps[gap] += 1
    if gaps:
        spacing = max(gaps.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    else:
        spacing = _half_point(body_size * 1.2)
    return BodyStats(
        body_font_size=body_size,
        body_line_spacing=spacing,
        page_count=doc.page_count,
    )


def assemble_lines(doc: RawDocument, merge_factor: float = LINE_MERGE_FACTOR) -> list[Line]:
    """Merge spans sharing a baseline into lines; rotated spans stay alone."""
    lines: list[Line] = []
    for page_index in range(doc.page_count):
        page_spans = [s for s in doc.spans_on_page(page_index)]
        upright = sorted(
            (s for s in page_spans if not s.rotated),
            key=lambda s: (s.baseline, s.bbox.x0),
        )
        groups: list[list[Span]] = []
        for span in upright:
            if groups:
                anchor = groups[-1][-1]
                tolerance = merge_factor * min(span.font_size, anchor.font_size)
                if abs(span.baseline - anchor.baseline) <= tolerance:
                    groups[-1].append(span)
                    continue
            groups.append([span])
        for group in groups:
            group.sort(key=lambda s: (s.bbox.x0, s.bbox.x1))
            bbox = group[0].bbox
            for span in group[1:]:
                bbox = bbox.union(span.bbox)
            lines.append(Line(spans=tuple(group), bbox=bbox, page_index=page_index))
        for span in page_spans:
            if span.rotated:
                lines.append(Line(spans=(span,), bbox=span.bbox, page_index=page_index))
    lines.sort(key=lambda l: (l.page_index, l.bbox.y0, l.bbox.x0))
    return lines


def _x_overlaps(a: Rect, b: Rect) -> bool:
    return min(a.x1, b.x1) > max(a.x0, b.x0)


def assemble_blocks(
    lines: list[Line], stats: BodyStats, gap_factor: float = BLOCK_GAP_FACTOR
) -> list[Block]:
    """Group consecutive close lines with overlapping x-extents."""
    blocks: list[Block] = []
    group: list[Line] = []

    def flush() -> None:
        if not group:
            return
        bbox = group[0].bbox
        for line in group[1:]:
            bbox = bbox.union(line.bbox)
        blocks.append(Block(lines=tuple(group), bbox=bbox, page_index=group[0].page_index))
        group.clear()

    max_gap = gap_factor * stats.body_line_spacing
    for line in lines:
        if group:
            prev = group[-1]
            same_block = (
                line.page_index == prev.page_index
                and 0 <= line.baseline - prev.baseline <= max_gap
                and _x_overlaps(line.bbox, prev.bbox)
                and not any(s.rotated for s in line.spans)
                and not any(s.rotated for s in prev.spans)
            )
            if not same_block:
                flush()
        group.append(line)
    flush()
    return blocks


def bind_links(doc: RawDocument, min_overlap: float = LINK_BIND_MIN_OVERLAP) -> RawDocument:
    """Attach each link to spans it covers by at least half their area."""
    if not doc.links:
        return doc
    by_page: dict[int, list] = defaultdict(list)
    for link in doc.links:
        by_page[link.page_index].append(link)
    new_spans = []
    for span in doc.spans:
        best_uri: str | None = None
        best_cover = 0.0
        area = span.bbox.area
        if area > 0:
            for link in by_page.get(span.page_index, ()):
                cover = span.bbox.intersection_area(link.bbox) / area
                if cover >= min_overlap and cover > best_cover:
                    best_uri = link.uri
                    best_cover = cover
        new_spans.append(span.with_uri(best_uri) if best_uri else span)
    return doc.with_spans(tuple(new_spans))


def find_main_title_block(blocks: list[Block], stats: BodyStats) -> int | None:
    """Index of the topmost first-page block with the largest above-body font."""
    first_page = [
        (i, b) for i, b in enumerate(blocks) if b.page_index == 0 and b.lines
    ]
    if not first_page:
        return None
    largest = max(b.max_font_size() for _, b in first_page)
    if largest <= stats.body_font_size:
        return None
    candidates = [(i, b) for i, b in first_page if b.max_font_size() == largest]
    candidates.sort(key=lambda ib: ib[1].bbox.y0)
    return candidates[0][0]


def infer_main_title(blocks: list[Block], stats: BodyStats) -> str | None:
    index = find_main_title_block(blocks, stats)
    if index is None:
        return None
    return " ".join(line.text for line in blocks[index].lines)
