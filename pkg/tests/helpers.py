"""Shared test fixtures: deterministic PDF generators and document builders."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from reportlab.lib.pagesizes import LETTER
from reportlab.pdfgen import canvas

from docmill.model import DrawSegment, LinkBox, MetadataTocEntry, RawDocument, Rect, Span

PAGE_W, PAGE_H = LETTER  # 612 x 792


@dataclass
class TextItem:
    text: str
    x: float
    y_top: float  # from the top of the page, like docmill coordinates
    font: str = "Helvetica"
    size: float = 11.0


@dataclass
class PageSpec:
    texts: list[TextItem] = field(default_factory=list)
    lines: list[tuple[float, float, float, float]] = field(default_factory=list)  # top-left coords
    links: list[tuple[float, float, float, float, str]] = field(default_factory=list)


def build_pdf(
    path: Path,
    pages: list[PageSpec],
    outline: list[tuple[str, int, int]] | None = None,  # (title, level>=1, page_index)
    title: str | None = None,
) -> Path:
    c = canvas.Canvas(str(path), pagesize=LETTER)
    if title:
        c.setTitle(title)
    for page_index, page in enumerate(pages):
        for item in page.texts:
            c.setFont(item.font, item.size)
            c.drawString(item.x, PAGE_H - item.y_top, item.text)
        for x0, y0, x1, y1 in page.lines:
            c.line(x0, PAGE_H - y0, x1, PAGE_H - y1)
        for x0, y0, x1, y1, uri in page.links:
            c.linkURL(uri, (x0, PAGE_H - y1, x1, PAGE_H - y0))
        if outline:
            for key_index, (entry_title, level, entry_page) in enumerate(outline):
                if entry_page == page_index:
                    key = f"bm{key_index}"
                    c.bookmarkPage(key)
                    c.addOutlineEntry(entry_title, key, level=level - 1)
        c.showPage()
    c.save()
    return path


@dataclass
class Article:
    """Ground truth for a generated article-style PDF."""

    path: Path
    title: str
    sections: list[tuple[str, list[str]]]  # (heading, paragraphs)
    footer: str | None


def build_article_pdf(
    path: Path,
    title: str,
    sections: list[tuple[str, list[str]]],
    footer: str | None = None,
    body_size: float = 11.0,
    heading_size: float = 15.0,
    title_size: float = 22.0,
    chars_per_line: int = 78,
) -> Article:
    """A multi-page article: big title, bold section headings, body text,
    optional repeated footer. Text wraps naively at a character budget."""
    pages: list[PageSpec] = [PageSpec()]
    y = 80.0
    line_step = body_size * 1.3
    bottom = PAGE_H - 72.0

    def ensure_room(needed: float) -> None:
        nonlocal y
        if y + needed > bottom:
            pages.append(PageSpec())
            y = 72.0

    pages[0].texts.append(TextItem(title, 72, y, "Helvetica-Bold", title_size))
    y += title_size * 1.8

    for heading, paragraphs in sections:
        ensure_room(heading_size * 2 + line_step * 2)
        y += heading_size * 0.8
        pages[-1].texts.append(TextItem(heading, 72, y, "Helvetica-Bold", heading_size))
        y += heading_size * 1.6
        for paragraph in paragraphs:
            words = paragraph.split()
            line = ""
            wrapped: list[str] = []
            for word in words:
                if line and len(line) + 1 + len(word) > chars_per_line:
                    wrapped.append(line)
                    line = word
                else:
                    line = f"{line} {word}".strip()
            if line:
                wrapped.append(line)
            for text_line in wrapped:
                ensure_room(line_step)
                pages[-1].texts.append(TextItem(text_line, 72, y, "Helvetica", body_size))
                y += line_step
            y += line_step * 0.6  # paragraph gap, still within block-join range

    if footer:
        for page in pages:
            page.texts.append(TextItem(footer, 72, PAGE_H - 36, "Helvetica", 9.0))

    build_pdf(path, pages, title=title)
    return Article(path=path, title=title, sections=sections, footer=footer)


def build_table_pdf(
    path: Path,
    cells: list[list[str]],
    x0: float = 100.0,
    y0_top: float = 200.0,
    col_width: float = 110.0,
    row_height: float = 28.0,
    merge_top_row: bool = False,
    extra_text: str | None = "Paragraph near the table with enough words here.",
) -> Path:
    """A page with a fully ruled table (optionally a merged header row)."""
    rows = len(cells)
    cols = len(cells[0])
    page = PageSpec()
    if extra_text:
        page.texts.append(TextItem(extra_text, 72, 100, "Helvetica", 11))
    xs = [x0 + i * col_width for i in range(cols + 1)]
    ys = [y0_top + j * row_height for j in range(rows + 1)]
    for yy in ys:
        page.lines.append((xs[0], yy, xs[-1], yy))
    for i, xx in enumerate(xs):
        if merge_top_row and 0 < i < cols:
            # interior verticals skip the first row: top row reads merged
            page.lines.append((xx, ys[1], xx, ys[-1]))
        else:
            page.lines.append((xx, ys[0], xx, ys[-1]))
    for r, row in enumerate(cells):
        for col, text in enumerate(row):
            if merge_top_row and r == 0 and col > 0:
                continue
            page.texts.append(
                TextItem(text, xs[col] + 8, ys[r] + row_height * 0.7, "Helvetica", 10)
            )
    return build_pdf(path, [page])


# -- in-memory document builders (no PDF reader involved) ---------------------


def make_span(
    page: int,
    x0: float,
    y0: float,
    text: str,
    size: float = 11.0,
    font: str = "Helvetica",
    bold: bool = False,
    italic: bool = False,
    mono: bool = False,
    width: float | None = None,
    height: float | None = None,
) -> Span:
    w = width if width is not None else max(len(text) * size * 0.5, 1.0)
    h = height if height is not None else size
    return Span(
        page_index=page,
        bbox=Rect(x0, y0, x0 + w, y0 + h),
        text=text,
        font_size=size,
        font_name=font,
        bold=bold,
        italic=italic,
        monospaced=mono,
    )


def make_document(
    spans: list[Span],
    page_count: int | None = None,
    segments: list[DrawSegment] = (),
    links: list[LinkBox] = (),
    toc: list[MetadataTocEntry] | None = None,
    page_size: tuple[float, float] = (612.0, 792.0),
) -> RawDocument:
    count = page_count
    if count is None:
        indices = [s.page_index for s in spans]
        indices += [s.page_index for s in segments]
        indices += [l.page_index for l in links]
        count = (max(indices) + 1) if indices else 1
    return RawDocument(
        page_count=count,
        page_sizes=tuple(page_size for _ in range(count)),
        spans=tuple(spans),
        segments=tuple(segments),
        links=tuple(links),
        metadata_toc=tuple(toc) if toc else None,
    )


def random_fixture_document(rng: random.Random) -> RawDocument:
    """A random valid RawDocument on the 3-decimal float grid."""
    page_count = rng.randint(1, 5)

    def coin(p: float) -> bool:
        return rng.random() < p

    def grid_float(lo: float, hi: float) -> float:
        return round(rng.uniform(lo, hi), 3)

    spans = []
    for _ in range(rng.randint(0, 12)):
        x0 = grid_float(0, 500)
        y0 = grid_float(0, 700)
        spans.append(
            Span(
                page_index=rng.randrange(page_count),
                bbox=Rect(x0, y0, round(x0 + grid_float(1, 100), 3), round(y0 + grid_float(1, 30), 3)),
                text=rng.choice(["alpha", "beta", "Gamma delta", "42", "x y z"]),
                font_size=round(rng.uniform(6, 30) * 2) / 2,
                font_name=rng.choice(["Helvetica", "Times-Roman", "Courier-Bold"]),
                bold=coin(0.3),
                italic=coin(0.2),
                monospaced=coin(0.1),
                rotated=coin(0.05),
                uri="https://example.com/x" if coin(0.1) else None,
            )
        )
    segments = [
        DrawSegment(
            page_index=rng.randrange(page_count),
            p0=(grid_float(0, 600), grid_float(0, 700)),
            p1=(grid_float(0, 600), grid_float(0, 700)),
            stroke_width=round(rng.uniform(0.25, 3) * 4) / 4,
        )
        for _ in range(rng.randint(0, 5))
    ]
    links = []
    for _ in range(rng.randint(0, 3)):
        x0 = grid_float(0, 500)
        y0 = grid_float(0, 700)
        links.append(
            LinkBox(
                page_index=rng.randrange(page_count),
                bbox=Rect(x0, y0, round(x0 + grid_float(1, 80), 3), round(y0 + grid_float(1, 20), 3)),
                uri=f"https://example.com/{rng.randrange(1000)}",
            )
        )
    toc = None
    if coin(0.5):
        toc = [
            MetadataTocEntry(
                title=rng.choice(["Intro", "Methods", "Results"]),
                level=rng.randint(1, 3),
                page_index=rng.randrange(page_count),
            )
            for _ in range(rng.randint(1, 4))
        ]
    return make_document(
        spans,
        page_count=page_count,
        segments=segments,
        links=links,
        toc=toc,
        page_size=(612.0, 792.0),
    )


# -- random markdown + chunker invariant oracle --------------------------------

_WORDS = (
    "lorem ipsum dolor sit amet consectetur adipiscing elit sed eiusmod tempor "
    "incididunt labore dolore magna aliqua enim minim veniam quis nostrud "
    "exercitation ullamco laboris nisi aliquip commodo consequat duis aute irure"
).split()


def gen_random_markdown(rng: random.Random) -> str:
    """A random markdown document with headings, paragraphs, pipe tables
    and fenced code blocks."""
    lines: list[str] = []

    def words(n: int) -> str:
        return " ".join(rng.choice(_WORDS) for _ in range(n))

    def paragraph() -> None:
        for _ in range(rng.randint(1, 4)):
            lines.append(words(rng.randint(4, 30)))
        lines.append("")

    def table() -> None:
        cols = rng.randint(2, 4)
        lines.append("| " + " | ".join(words(1) for _ in range(cols)) + " |")
        lines.append("| " + " | ".join("---" for _ in range(cols)) + " |")
        for _ in range(rng.randint(1, 6)):
            lines.append("| " + " | ".join(words(rng.randint(1, 3)) for _ in range(cols)) + " |")
        lines.append("")

    def fence() -> None:
        lines.append("```")
        for _ in range(rng.randint(1, 8)):
            lines.append("    code_" + words(rng.randint(1, 4)).replace(" ", "_"))
        lines.append("```")
        lines.append("")

    def content_run() -> None:
        for _ in range(rng.randint(0, 4)):
            pick = rng.random()
            if pick < 0.70:
                paragraph()
            elif pick < 0.88:
                table()
            else:
                fence()

    if rng.random() < 0.3:
        content_run()  # preamble before any heading
    level = 1
    for section in range(rng.randint(0, 8)):
        level = max(1, min(4, level + rng.choice([-2, -1, 0, 1, 1])))
        lines.append("#" * level + f" Section {section} {words(2)}")
        lines.append("")
        content_run()
    return "\n".join(lines).rstrip("\n")


def _scan_headings(lines: list[str]) -> list[tuple[int, int]]:
    """Independent fence-aware ATX scan: (line_no, level)."""
    import re as _re

    found = []
    fence_marker = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        open_match = _re.match(r"^(```|~~~)", stripped)
        if open_match:
            if fence_marker is None:
                fence_marker = open_match.group(1)
            elif stripped.startswith(fence_marker):
                fence_marker = None
            continue
        if fence_marker is None:
            m = _re.match(r"^(#{1,6})\s+\S", line)
            if m:
                found.append((i, len(m.group(1))))
    return found


def verify_chunker_invariants(text: str, cfg) -> None:
    """Assert coverage, header context, size bound, atomicity and
    determinism for one markdown document."""
    from docmill.chunker import build_toc_tree, chunk_tree, filter_min_words, hard_split
    from docmill.markdown import MarkdownDoc

    md = MarkdownDoc.from_text(text)
    source_lines = md.lines
    heading_set = {i for i, _ in _scan_headings(source_lines)}

    tree = build_toc_tree(md)
    tree_chunks = chunk_tree(tree, md, cfg)

    # header context (exact, pre-split): parent_headers == heading stack
    # open at the START of the chunk's first content line (a collapsed
    # section may begin with a descendant heading as body text)
    stack_at: list[list[str]] = []
    stack: list[tuple[int, str]] = []
    headings_by_line = dict(_scan_headings(source_lines))
    for i, line in enumerate(source_lines):
        stack_at.append([h for _, h in stack])
        if i in headings_by_line:
            level = headings_by_line[i]
            while stack and stack[-1][0] >= level:
                stack.pop()
            stack.append((level, line.strip()))
    for chunk in tree_chunks:
        assert chunk.parent_headers == stack_at[chunk.start_line], (
            f"header path mismatch at line {chunk.start_line}"
        )
        if chunk.parent_headers:
            assert chunk.text.startswith("\n".join(chunk.parent_headers) + "\n\n")

    split_chunks = []
    for chunk in tree_chunks:
        split_chunks.extend(hard_split(chunk, cfg))

    # coverage: non-blank, non-heading source lines appear exactly once, in order
    expected = [
        (i, line)
        for i, line in enumerate(source_lines)
        if line.strip() and i not in heading_set
    ]
    got = [
        (i, line)
        for chunk in split_chunks
        for i, line in chunk.content_lines
        if line.strip() and i not in heading_set
    ]
    assert got == expected, "content coverage broken"

    # size bound and atomicity
    owner: dict[int, int] = {}
    for chunk_id, chunk in enumerate(split_chunks):
        for i, _ in chunk.content_lines:
            owner[i] = chunk_id
        if chunk.word_count > cfg.hard_limit_words:
            content = [l for _, l in chunk.content_lines if l.strip()]
            is_single_fence = content and content[0].strip().startswith(("```", "~~~"))
            is_single_table = content and all(l.strip().startswith("|") for l in content)
            is_single_line = len(content) == 1
            assert is_single_fence or is_single_table or is_single_line, (
                f"oversized chunk is splittable: {chunk.word_count} words"
            )

    # every source table / fence stays within one chunk
    i = 0
    fence_marker = None
    run_start = None
    runs: list[list[int]] = []
    current_table: list[int] = []
    for i, line in enumerate(source_lines):
        stripped = line.strip()
        if fence_marker is None and stripped.startswith(("```", "~~~")):
            fence_marker = stripped[:3]
            run_start = i
            continue
        if fence_marker is not None and stripped.startswith(fence_marker):
            runs.append(list(range(run_start, i + 1)))
            fence_marker = None
            continue
        if fence_marker is None:
            if stripped.startswith("|"):
                current_table.append(i)
            elif current_table:
                runs.append(current_table)
                current_table = []
    if current_table:
        runs.append(current_table)
    for run in runs:
        owners = {owner[i] for i in run if i in owner}
        assert len(owners) <= 1, f"table/fence split across chunks: lines {run}"

    # determinism: the full pipeline twice gives identical records
    first = [c.to_record("d") for c in filter_min_words(split_chunks, cfg)]
    tree2 = build_toc_tree(MarkdownDoc.from_text(text))
    chunks2 = chunk_tree(tree2, MarkdownDoc.from_text(text), cfg)
    split2 = []
    for chunk in chunks2:
        split2.extend(hard_split(chunk, cfg))
    second = [c.to_record("d") for c in filter_min_words(split2, cfg)]
    assert first == second, "chunking is not deterministic"
