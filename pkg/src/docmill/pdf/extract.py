"""Top-level PDF extraction: spans, ruling segments, links and outline."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from docmill.model import (
    DrawSegment,
    LinkBox,
    MetadataTocEntry,
    RawDocument,
    Rect,
    Span,
)
from docmill.pdf.content import SPACE_GAP_EM, PageInterpreter, TextPiece
from docmill.pdf.document import PdfFile
from docmill.pdf.objects import PdfName, PdfRef

logger = logging.getLogger(__name__)

# pieces further apart than this (in ems) start a new span: wider than a
# justified word gap, narrower than a tab stop or table-cell padding (the
# line layer re-joins same-baseline spans, so splitting early is cheap)
SPAN_BREAK_EM = 0.75


def extract_raw(pdf_path: str | Path) -> RawDocument:
    """Read a PDF into geometric primitives with top-left coordinates.

    Raises FileNotFoundError, EncryptedPdfError or MalformedPdfError.
    """
    path = Path(pdf_path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    pdf = PdfFile(path.read_bytes())

    pages = pdf.pages()
    page_sizes: list[tuple[float, float]] = []
    spans: list[Span] = []
    segments: list[DrawSegment] = []
    links: list[LinkBox] = []

    for page_index, page in enumerate(pages):
        media = pdf.resolve(page.get("MediaBox")) or [0, 0, 612, 792]
        try:
            mx0, my0, mx1, my1 = (float(pdf.resolve(v)) for v in media)
        except (TypeError, ValueError):
            mx0, my0, mx1, my1 = 0.0, 0.0, 612.0, 792.0
        width, height = abs(mx1 - mx0), abs(my1 - my0)
        page_sizes.append((width, height))

        interp = PageInterpreter(pdf, page.get("Resources"))
        try:
            interp.run(pdf.content_bytes(page))
        except Exception:
            logger.exception("content stream of page %d failed; skipping", page_index)
            continue

        spans.extend(
            _pieces_to_spans(interp.pieces, page_index, mx0, my0, height)
        )
        for seg in interp.segments:
            segments.append(
                DrawSegment(
                    page_index=page_index,
                    p0=(seg.p0[0] - mx0, height - (seg.p0[1] - my0)),
                    p1=(seg.p1[0] - mx0, height - (seg.p1[1] - my0)),
                    stroke_width=seg.width,
                )
            )
        links.extend(_page_links(pdf, page, page_index, mx0, my0, height))

    toc = _outline_entries(pdf, len(pages))
    spans.sort(key=lambda s: (s.page_index, s.bbox.y0, s.bbox.x0))
    return RawDocument(
        page_count=len(pages),
        page_sizes=tuple(page_sizes),
        spans=tuple(spans),
        segments=tuple(segments),
        links=tuple(links),
        metadata_toc=toc,
    )


def _pieces_to_spans(
    pieces: list[TextPiece], page_index: int, mx0: float, my0: float, height: float
) -> list[Span]:
    """Merge shown strings into spans of uniform formatting."""
    upright = [p for p in pieces if not p.rotated]
    rotated = [p for p in pieces if p.rotated]
    upright.sort(key=lambda p: (round(-p.y, 1), p.x))

    merged: list[list[TextPiece]] = []
    for piece in upright:
        if merged:
            group = merged[-1]
            last = group[-1]
            same_format = (
                last.font is piece.font
                and abs(last.size - piece.size) <= 0.05
                and abs(last.y - piece.y) <= 0.15 * max(last.size, 1.0)
            )
            gap = piece.x - (last.x + last.width)
            if same_format and -0.5 * piece.size <= gap <= SPAN_BREAK_EM * piece.size:
                group.append(piece)
                continue
        merged.append([piece])

    spans: list[Span] = []
    for group in merged:
        spans.extend(_group_to_span(group, page_index, mx0, my0, height))
    for piece in rotated:
        spans.extend(_group_to_span([piece], page_index, mx0, my0, height, rotated=True))
    return spans


def _group_to_span(
    group: list[TextPiece],
    page_index: int,
    mx0: float,
    my0: float,
    height: float,
    rotated: bool = False,
) -> list[Span]:
    first = group[0]
    parts = [first.text]
    for prev, cur in zip(group, group[1:]):
        gap = cur.x - (prev.x + prev.width)
        if gap >= SPACE_GAP_EM * cur.size and not parts[-1].endswith(" "):
            parts.append(" ")
        parts.append(cur.text)
    text = "".join(parts).rstrip()
    if not text.strip():
        return []

    size = first.size
    font = first.font
    x0 = first.x - mx0
    x1 = max(p.x + p.width for p in group) - mx0
    baseline = first.y - my0
    top = baseline + font.ascent * size
    bottom = baseline + font.descent * size
    bbox = Rect(
        min(x0, x1),
        min(height - top, height - bottom),
        max(x0, x1),
        max(height - top, height - bottom),
    )
    return [
        Span(
            page_index=page_index,
            bbox=bbox,
            text=text,
            font_size=round(size, 2),
            font_name=font.name,
            bold=font.bold,
            italic=font.italic,
            monospaced=font.monospaced,
            rotated=rotated,
        )
    ]


def _page_links(
    pdf: PdfFile, page: dict[str, Any], page_index: int, mx0: float, my0: float, height: float
) -> list[LinkBox]:
    annots = pdf.resolve(page.get("Annots"))
    if not isinstance(annots, list):
        return []
    out: list[LinkBox] = []
    for ref in annots:
        annot = pdf.resolve(ref)
        if not isinstance(annot, dict):
            continue
        subtype = annot.get("Subtype")
        if not isinstance(subtype, PdfName) or subtype.value != "Link":
            continue
        uri = _link_uri(pdf, annot)
        if not uri:
            continue
        rect = pdf.resolve(annot.get("Rect"))
        if not isinstance(rect, list) or len(rect) != 4:
            continue
        try:
            x0, y0, x1, y1 = (float(pdf.resolve(v)) for v in rect)
        except (TypeError, ValueError):
            continue
        out.append(
            LinkBox(
                page_index=page_index,
                bbox=Rect(
                    min(x0, x1) - mx0,
                    height - (max(y0, y1) - my0),
                    max(x0, x1) - mx0,
                    height - (min(y0, y1) - my0),
                ),
                uri=uri,
            )
        )
    return out


def _link_uri(pdf: PdfFile, annot: dict[str, Any]) -> str | None:
    action = pdf.resolve(annot.get("A"))
    if isinstance(action, dict):
        kind = action.get("S")
        if isinstance(kind, PdfName) and kind.value == "URI":
            uri = pdf.resolve(action.get("URI"))
            if isinstance(uri, bytes):
                return uri.decode("utf-8", "replace")
            if isinstance(uri, str):
                return uri
    uri = pdf.resolve(annot.get("URI"))
    if isinstance(uri, bytes):
        return uri.decode("utf-8", "replace")
    return None


def _decode_text(value: Any) -> str | None:
    if isinstance(value, bytes):
        if value.startswith(b"\xfe\xff"):
            return value[2:].decode("utf-16-be", "replace")
        return value.decode("latin-1", "replace")
    if isinstance(value, str):
        return value
    return None


def _outline_entries(pdf: PdfFile, page_count: int) -> tuple[MetadataTocEntry, ...] | None:
    try:
        catalog = pdf.catalog()
    except Exception:
        return None
    outline_root = pdf.resolve(catalog.get("Outlines"))
    if not isinstance(outline_root, dict):
        return None
    page_index = pdf.page_ref_index()

    entries: list[MetadataTocEntry] = []
    visited: set[tuple[int, int] | int] = set()

    def walk(node_ref: Any, level: int) -> None:
        node = pdf.resolve(node_ref)
        while isinstance(node, dict) and len(entries) < 10_000:
            marker = (
                (node_ref.num, node_ref.gen) if isinstance(node_ref, PdfRef) else id(node)
            )
            if marker in visited:
                return
            visited.add(marker)
            title = _decode_text(pdf.resolve(node.get("Title")))
            page = _dest_page(pdf, node, page_index)
            if title and page is not None and 0 <= page < page_count:
                entries.append(
                    MetadataTocEntry(title=title.strip(), level=level, page_index=page)
                )
            child = node.get("First")
            if child is not None:
                walk(child, level + 1)
            node_ref = node.get("Next")
            node = pdf.resolve(node_ref)

    walk(outline_root.get("First"), 1)
    return tuple(entries) if entries else None


def _dest_page(
    pdf: PdfFile, node: dict[str, Any], page_index: dict[tuple[int, int], int]
) -> int | None:
    dest = pdf.resolve(node.get("Dest"))
    if dest is None:
        action = pdf.resolve(node.get("A"))
        if isinstance(action, dict):
            kind = action.get("S")
            if isinstance(kind, PdfName) and kind.value == "GoTo":
                dest = pdf.resolve(action.get("D"))
    dest = _resolve_named_dest(pdf, dest)
    if isinstance(dest, dict):
        dest = pdf.resolve(dest.get("D"))
    if isinstance(dest, list) and dest:
        target = dest[0]
        if isinstance(target, PdfRef):
            return page_index.get((target.num, target.gen))
        if isinstance(target, (int, float)):  # some writers store the index
            return int(target)
    return None


def _resolve_named_dest(pdf: PdfFile, dest: Any) -> Any:
    name: str | None = None
    if isinstance(dest, PdfName):
        name = dest.value
    elif isinstance(dest, bytes):
        name = dest.decode("latin-1", "replace")
    if name is None:
        return dest
    try:
        catalog = pdf.catalog()
    except Exception:
        return None
    dests = pdf.resolve(catalog.get("Dests"))
    if isinstance(dests, dict) and name in dests:
        return pdf.resolve(dests[name])
    names_root = pdf.resolve(catalog.get("Names"))
    if isinstance(names_root, dict):
        tree = pdf.resolve(names_root.get("Dests"))
        found = _name_tree_lookup(pdf, tree, name)
        if found is not None:
            return found
    return None


def _name_tree_lookup(pdf: PdfFile, node: Any, name: str, depth: int = 0) -> Any:
    if depth > 16 or not isinstance(node, dict):
        return None
    names = pdf.resolve(node.get("Names"))
    if isinstance(names, list):
        for i in range(0, len(names) - 1, 2):
            key = names[i]
            key_str = key.decode("latin-1", "replace") if isinstance(key, bytes) else key
            if key_str == name:
                return pdf.resolve(names[i + 1])
    kids = pdf.resolve(node.get("Kids"))
    if isinstance(kids, list):
        for kid in kids:
            found = _name_tree_lookup(pdf, pdf.resolve(kid), name, depth + 1)
            if found is not None:
                return found
    return None
