"""Geometric primitives extracted from a PDF before any layout analysis.

Coordinates are in PDF points with the origin at the top-left of the page
and y increasing downward, so "top of page" heuristics read naturally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

from docmill.errors import InvariantViolation


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle; x0 <= x1 and y0 <= y1."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def union(self, other: "Rect") -> "Rect":
        return Rect(
            min(self.x0, other.x0),
            min(self.y0, other.y0),
            max(self.x1, other.x1),
            max(self.y1, other.y1),
        )

    def intersection_area(self, other: "Rect") -> float:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        if w <= 0 or h <= 0:
            return 0.0
        return w * h

    def contains_point(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def translated(self, dx: float, dy: float) -> "Rect":
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)


@dataclass(frozen=True)
class Span:
    """A run of consecutive characters sharing formatting, with its box.

    ``uri`` is populated by link binding; ``rotated`` marks text whose
    matrix is not horizontal (such spans never merge into lines).
    """

    page_index: int
    bbox: Rect
    text: str
    font_size: float
    font_name: str
    bold: bool = False
    italic: bool = False
    monospaced: bool = False
    rotated: bool = False
    uri: str | None = None

    @property
    def baseline(self) -> float:
        # Bottom edge stands in for the baseline: it differs from the true
        # baseline only by the font descent, well inside merge tolerances.
        return self.bbox.y1

    def with_uri(self, uri: str) -> "Span":
        return replace(self, uri=uri)


@dataclass(frozen=True)
class DrawSegment:
    """A stroked line segment from the page's drawing layer."""

    page_index: int
    p0: tuple[float, float]
    p1: tuple[float, float]
    stroke_width: float = 1.0


@dataclass(frozen=True)
class LinkBox:
    """A clickable URI rectangle layered over page content."""

    page_index: int
    bbox: Rect
    uri: str


@dataclass(frozen=True)
class MetadataTocEntry:
    """One outline (bookmark) entry from the document metadata."""

    title: str
    level: int
    page_index: int


@dataclass(frozen=True)
class RawDocument:
    """Everything extracted from a PDF, before layout heuristics run."""

    page_count: int
    page_sizes: tuple[tuple[float, float], ...]
    spans: tuple[Span, ...]
    segments: tuple[DrawSegment, ...] = ()
    links: tuple[LinkBox, ...] = ()
    metadata_toc: tuple[MetadataTocEntry, ...] | None = None

    def spans_on_page(self, page_index: int) -> Iterator[Span]:
        return (s for s in self.spans if s.page_index == page_index)

    def with_spans(self, spans: tuple[Span, ...]) -> "RawDocument":
        return replace(self, spans=spans)


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise InvariantViolation(message)


def validate_document(doc: RawDocument) -> RawDocument:
    """Raise InvariantViolation if any structural rule is broken."""
    _check(doc.page_count >= 0, "page_count must be >= 0")
    _check(
        len(doc.page_sizes) == doc.page_count,
        "page_sizes length must equal page_count",
    )
    for w, h in doc.page_sizes:
        _check(w > 0 and h > 0, "page sizes must be positive")
    for span in doc.spans:
        _check(span.bbox.x0 <= span.bbox.x1, "span bbox must satisfy x0 <= x1")
        _check(span.bbox.y0 <= span.bbox.y1, "span bbox must satisfy y0 <= y1")
        _check(span.font_size > 0, "span font_size must be > 0")
        _check(bool(span.text), "span text must be non-empty")
        _check(
            0 <= span.page_index < doc.page_count,
            "span page_index must be < page_count",
        )
    for seg in doc.segments:
        _check(
            0 <= seg.page_index < doc.page_count,
            "segment page_index must be < page_count",
        )
    for link in doc.links:
        _check(bool(link.uri), "link uri must be non-empty")
        _check(link.bbox.x0 <= link.bbox.x1, "link bbox must satisfy x0 <= x1")
        _check(link.bbox.y0 <= link.bbox.y1, "link bbox must satisfy y0 <= y1")
        _check(
            0 <= link.page_index < doc.page_count,
            "link page_index must be < page_count",
        )
    if doc.metadata_toc is not None:
        for entry in doc.metadata_toc:
            _check(entry.level >= 1, "toc level must be >= 1")
            _check(
                0 <= entry.page_index < doc.page_count,
                "toc page_index must be < page_count",
            )
    return doc
