"""Canonical JSON fixture format for extracted documents.

Fixtures let every layout heuristic be tested without touching a PDF
reader. The encoding is canonical: sorted keys, floats rounded to three
decimals, no insignificant whitespace, so dumps diff cleanly and dumping
the same document twice is byte-identical.

Note: round-tripping is exact only for documents whose floats already sit
on the 3-decimal grid; anything finer is rounded on the way out.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from docmill.errors import SchemaViolation
from docmill.model import (
    DrawSegment,
    LinkBox,
    MetadataTocEntry,
    RawDocument,
    Rect,
    Span,
    validate_document,
)


def _f(x: float) -> float:
    # int-valued floats stay floats after round(); JSON prints 12.0 not 12
    return round(float(x), 3)


def document_to_dict(doc: RawDocument) -> dict[str, Any]:
    return {
        "page_count": doc.page_count,
        "page_sizes": [[_f(w), _f(h)] for w, h in doc.page_sizes],
        "spans": [
            {
                "page": s.page_index,
                "bbox": [_f(s.bbox.x0), _f(s.bbox.y0), _f(s.bbox.x1), _f(s.bbox.y1)],
                "text": s.text,
                "font_size": _f(s.font_size),
                "font_name": s.font_name,
                "bold": s.bold,
                "italic": s.italic,
                "mono": s.monospaced,
                "rotated": s.rotated,
                "uri": s.uri,
            }
            for s in doc.spans
        ],
        "segments": [
            {
                "page": g.page_index,
                "p0": [_f(g.p0[0]), _f(g.p0[1])],
                "p1": [_f(g.p1[0]), _f(g.p1[1])],
                "width": _f(g.stroke_width),
            }
            for g in doc.segments
        ],
        "links": [
            {
                "page": l.page_index,
                "bbox": [_f(l.bbox.x0), _f(l.bbox.y0), _f(l.bbox.x1), _f(l.bbox.y1)],
                "uri": l.uri,
            }
            for l in doc.links
        ],
        "toc": None
        if doc.metadata_toc is None
        else [
            {"title": t.title, "level": t.level, "page": t.page_index}
            for t in doc.metadata_toc
        ],
    }


def dump_fixture(doc: RawDocument, json_path: str | Path) -> None:
    """Write *doc* to *json_path* in canonical form."""
    validate_document(doc)
    payload = json.dumps(
        document_to_dict(doc), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    Path(json_path).write_text(payload + "\n", encoding="utf-8")


class _Reader:
    """Typed accessors over parsed JSON that report the failing field path."""

    def __init__(self, data: Any, path: str = "$") -> None:
        self.data = data
        self.path = path

    def _fail(self, message: str) -> SchemaViolation:
        return SchemaViolation(self.path, message)

    def require(self, key: str) -> "_Reader":
        if not isinstance(self.data, dict):
            raise self._fail("expected object")
        if key not in self.data:
            raise self._fail(f"missing key '{key}'")
        return _Reader(self.data[key], f"{self.path}.{key}")

    def optional(self, key: str, default: Any = None) -> "_Reader":
        if not isinstance(self.data, dict):
            raise self._fail("expected object")
        return _Reader(self.data.get(key, default), f"{self.path}.{key}")

    def items(self) -> list["_Reader"]:
        if not isinstance(self.data, list):
            raise self._fail("expected array")
        return [_Reader(v, f"{self.path}[{i}]") for i, v in enumerate(self.data)]

    def as_int(self) -> int:
        if isinstance(self.data, bool) or not isinstance(self.data, int):
            raise self._fail("expected integer")
        return self.data

    def as_float(self) -> float:
        if isinstance(self.data, bool) or not isinstance(self.data, (int, float)):
            raise self._fail("expected number")
        return float(self.data)

    def as_str(self) -> str:
        if not isinstance(self.data, str):
            raise self._fail("expected string")
        return self.data

    def as_bool(self, default: bool = False) -> bool:
        if self.data is None:
            return default
        if not isinstance(self.data, bool):
            raise self._fail("expected boolean")
        return self.data

    def as_rect(self) -> Rect:
        if not isinstance(self.data, list) or len(self.data) != 4:
            raise self._fail("expected [x0, y0, x1, y1]")
        vals = [_Reader(v, f"{self.path}[{i}]").as_float() for i, v in enumerate(self.data)]
        return Rect(*vals)

    def as_point(self) -> tuple[float, float]:
        if not isinstance(self.data, list) or len(self.data) != 2:
            raise self._fail("expected [x, y]")
        return (
            _Reader(self.data[0], f"{self.path}[0]").as_float(),
            _Reader(self.data[1], f"{self.path}[1]").as_float(),
        )


def document_from_dict(data: Any) -> RawDocument:
    root = _Reader(data)
    page_count = root.require("page_count").as_int()
    page_sizes = tuple(p.as_point() for p in root.require("page_sizes").items())

    spans = []
    for item in root.require("spans").items():
        spans.append(
            Span(
                page_index=item.require("page").as_int(),
                bbox=item.require("bbox").as_rect(),
                text=item.require("text").as_str(),
                font_size=item.require("font_size").as_float(),
                font_name=item.require("font_name").as_str(),
                bold=item.require("bold").as_bool(),
                italic=item.require("italic").as_bool(),
                monospaced=item.require("mono").as_bool(),
                rotated=item.optional("rotated").as_bool(False),
                uri=None
                if item.optional("uri").data is None
                else item.optional("uri").as_str(),
            )
        )

    segments = []
    for item in root.optional("segments", []).items():
        segments.append(
            DrawSegment(
                page_index=item.require("page").as_int(),
                p0=item.require("p0").as_point(),
                p1=item.require("p1").as_point(),
                stroke_width=item.require("width").as_float(),
            )
        )

    links = []
    for item in root.optional("links", []).items():
        links.append(
            LinkBox(
                page_index=item.require("page").as_int(),
                bbox=item.require("bbox").as_rect(),
                uri=item.require("uri").as_str(),
            )
        )

    toc_reader = root.optional("toc")
    toc: tuple[MetadataTocEntry, ...] | None
    if toc_reader.data is None:
        toc = None
    else:
        toc = tuple(
            MetadataTocEntry(
                title=item.require("title").as_str(),
                level=item.require("level").as_int(),
                page_index=item.require("page").as_int(),
            )
            for item in toc_reader.items()
        )

    doc = RawDocument(
        page_count=page_count,
        page_sizes=page_sizes,
        spans=tuple(spans),
        segments=tuple(segments),
        links=tuple(links),
        metadata_toc=toc,
    )
    return validate_document(doc)


def load_fixture(json_path: str | Path) -> RawDocument:
    """Load a fixture file, validating schema and invariants."""
    try:
        data = json.loads(Path(json_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"invalid JSON: {exc}") from exc
    return document_from_dict(data)
