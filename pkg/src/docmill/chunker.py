"""Title-aware markdown chunking.

A ToC tree is built from ATX headings; sections are emitted whole while
they fit the soft word limit and subdivided through their subsections
otherwise. Every chunk carries the full heading path it lives under.
Chunks beyond the hard limit split at line boundaries, keeping pipe
tables and fenced code blocks atomic; fragments below the minimum word
count are discarded.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from docmill.markdown import MarkdownDoc, page_range

_ATX = re.compile(r"^(#{1,6})\s+(\S.*)$")
_FENCE = re.compile(r"^(```|~~~)")


@dataclass
class ChunkerConfig:
    soft_limit_words: int = 250
    hard_limit_words: int = 400
    min_words: int = 15

    def __post_init__(self) -> None:
        if not (0 < self.min_words < self.soft_limit_words <= self.hard_limit_words):
            raise ValueError(
                "limits must satisfy 0 < min_words < soft_limit <= hard_limit"
            )


@dataclass
class TocNode:
    """One section of the document; the root has no heading."""

    heading_line: int | None
    heading_text: str | None
    level: int
    content_start: int
    content_end: int  # exclusive; lines before the first child
    subtree_end: int  # exclusive; end of the whole section
    children: list["TocNode"] = field(default_factory=list)


@dataclass
class Chunk:
    """A retrieval unit: parent headings plus one section's content."""

    parent_headers: list[str]
    content_lines: list[tuple[int, str]] = field(repr=False, default_factory=list)
    start_line: int = 0
    start_page: int | None = None
    end_page: int | None = None

    @property
    def content_text(self) -> str:
        return "\n".join(text for _, text in self.content_lines)

    @property
    def text(self) -> str:
        if self.parent_headers:
            return "\n".join(self.parent_headers) + "\n\n" + self.content_text
        return self.content_text

    @property
    def word_count(self) -> int:
        """Words in the content only; prepended headers never count."""
        return len(self.content_text.split())

    def to_record(self, doc_id: str | None = None) -> dict:
        return {
            "text": self.text,
            "headers": list(self.parent_headers),
            "start_line": self.start_line,
            "start_page": self.start_page,
            "end_page": self.end_page,
            "word_count": self.word_count,
            "doc_id": doc_id,
        }


def _heading_lines(lines: list[str]) -> list[tuple[int, int, str]]:
    """(line_no, level, text) of ATX headings outside fenced code blocks."""
    found = []
    fence: str | None = None
    for i, line in enumerate(lines):
        fence_match = _FENCE.match(line.strip())
        if fence_match:
            marker = fence_match.group(1)
            if fence is None:
                fence = marker
            elif marker == fence:
                fence = None
            continue
        if fence is not None:
            continue
        m = _ATX.match(line)
        if m:
            found.append((i, len(m.group(1)), m.group(2).strip()))
    return found


def build_toc_tree(md: MarkdownDoc) -> TocNode:
    """Nest headings by level; skipped levels attach to the nearest
    shallower open section."""
    lines = md.lines
    headings = _heading_lines(lines)
    total = len(lines)

    root = TocNode(
        heading_line=None,
        heading_text=None,
        level=0,
        content_start=0,
        content_end=headings[0][0] if headings else total,
        subtree_end=total,
    )
    stack = [root]
    for pos, (line_no, level, text) in enumerate(headings):
        next_heading = headings[pos + 1][0] if pos + 1 < len(headings) else total
        while stack[-1].level >= level:
            stack.pop()
        node = TocNode(
            heading_line=line_no,
            heading_text=text,
            level=level,
            content_start=line_no + 1,
            content_end=next_heading,
            subtree_end=total,  # patched below
            children=[],
        )
        stack[-1].children.append(node)
        stack.append(node)

    def patch_subtree_end(node: TocNode, end: int) -> None:
        node.subtree_end = end
        for child, nxt in zip(node.children, node.children[1:]):
            patch_subtree_end(child, nxt.heading_line if nxt.heading_line is not None else end)
        if node.children:
            patch_subtree_end(node.children[-1], end)

    patch_subtree_end(root, total)
    return root


def _slice(lines: list[str], start: int, end: int) -> list[tuple[int, str]]:
    picked = [(i, lines[i]) for i in range(start, min(end, len(lines)))]
    while picked and not picked[0][1].strip():
        picked = picked[1:]
    while picked and not picked[-1][1].strip():
        picked = picked[:-1]
    return picked


def _words_in(lines: list[tuple[int, str]]) -> int:
    return sum(len(text.split()) for _, text in lines)


def _heading_as_header(node: TocNode) -> str:
    return "#" * node.level + " " + (node.heading_text or "")


def chunk_tree(root: TocNode, md: MarkdownDoc, cfg: ChunkerConfig) -> list[Chunk]:
    """Depth-first section chunking against the soft word limit."""
    lines = md.lines
    chunks: list[Chunk] = []

    def emit(headers: list[str], content: list[tuple[int, str]]) -> None:
        if not content:
            return
        chunks.append(
            Chunk(
                parent_headers=list(headers),
                content_lines=content,
                start_line=content[0][0],
            )
        )

    def walk(node: TocNode, path: list[str]) -> None:
        headers = path + ([_heading_as_header(node)] if node.heading_line is not None else [])
        is_section = node.heading_line is not None
        # a contentless node with a single child is the same chunk either
        # way; attribute it to the child so the header path stays deep
        if is_section and len(node.children) == 1:
            if not _slice(lines, node.content_start, node.content_end):
                walk(node.children[0], headers)
                return
        subtree = _slice(lines, node.content_start, node.subtree_end)
        # the root never collapses over its sections: every section chunk
        # must carry its own heading as context, not as body text
        fits = is_section and _words_in(subtree) <= cfg.soft_limit_words
        if fits or not node.children:
            emit(headers, subtree)
            return
        emit(headers, _slice(lines, node.content_start, node.content_end))
        for child in node.children:
            walk(child, headers)

    walk(root, [])
    return chunks


def _atomic_units(content: list[tuple[int, str]]) -> list[list[tuple[int, str]]]:
    """Lines grouped so pipe tables and fenced code blocks stay whole;
    blank lines ride with the preceding unit."""
    units: list[list[tuple[int, str]]] = []
    i = 0
    while i < len(content):
        line_no, text = content[i]
        stripped = text.strip()
        if not stripped:
            if units:
                units[-1].append(content[i])
            else:
                units.append([content[i]])
            i += 1
            continue
        fence_match = _FENCE.match(stripped)
        if fence_match:
            marker = fence_match.group(1)
            j = i + 1
            while j < len(content):
                if _FENCE.match(content[j][1].strip()) and content[j][1].strip().startswith(marker):
                    j += 1
                    break
                j += 1
            units.append(content[i:j])
            i = j
            continue
        if stripped.startswith("|"):
            j = i
            while j < len(content) and content[j][1].strip().startswith("|"):
                j += 1
            units.append(content[i:j])
            i = j
            continue
        units.append([content[i]])
        i += 1
    return units


def hard_split(chunk: Chunk, cfg: ChunkerConfig) -> list[Chunk]:
    """Split an over-hard-limit chunk at line boundaries, greedily packing
    atomic units; a single unit over the limit stays one oversized chunk."""
    if chunk.word_count <= cfg.hard_limit_words:
        return [chunk]
    units = _atomic_units(chunk.content_lines)
    packs: list[list[tuple[int, str]]] = []
    current: list[tuple[int, str]] = []
    current_words = 0
    for unit in units:
        unit_words = _words_in(unit)
        if current and current_words + unit_words > cfg.hard_limit_words:
            packs.append(current)
            current, current_words = [], 0
        current.extend(unit)
        current_words += unit_words
    if current:
        packs.append(current)

    out = []
    for pack in packs:
        while pack and not pack[0][1].strip():
            pack = pack[1:]
        while pack and not pack[-1][1].strip():
            pack = pack[:-1]
        if not pack:
            continue
        out.append(
            Chunk(
                parent_headers=list(chunk.parent_headers),
                content_lines=pack,
                start_line=pack[0][0],
            )
        )
    return out


def filter_min_words(chunks: list[Chunk], cfg: ChunkerConfig) -> list[Chunk]:
    """Drop fragments with fewer content words than the minimum."""
    return [c for c in chunks if c.word_count >= cfg.min_words]


def attach_pages(chunks: list[Chunk], md: MarkdownDoc) -> list[Chunk]:
    """Fill start/end pages from line provenance; absent for plain text."""
    for chunk in chunks:
        if not chunk.content_lines or not md.line_pages:
            continue
        first = min(n for n, _ in chunk.content_lines)
        last = max(n for n, _ in chunk.content_lines)
        pages = page_range(md, first, last)
        if pages is not None:
            chunk.start_page, chunk.end_page = pages
    return chunks


def chunk_markdown(md: MarkdownDoc, cfg: ChunkerConfig | None = None) -> list[Chunk]:
    """Full pipeline: tree, recursion, hard split, min-word filter, pages."""
    cfg = cfg or ChunkerConfig()
    tree = build_toc_tree(md)
    chunks = chunk_tree(tree, md, cfg)
    split: list[Chunk] = []
    for chunk in chunks:
        split.extend(hard_split(chunk, cfg))
    kept = filter_min_words(split, cfg)
    return attach_pages(kept, md)


def write_chunks_jsonl(chunks: list[Chunk], path: str | Path, doc_id: str | None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk.to_record(doc_id), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
