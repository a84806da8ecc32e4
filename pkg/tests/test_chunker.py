"""ToC-tree construction and title-aware chunking."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docmill.chunker import (
    Chunk,
    ChunkerConfig,
    attach_pages,
    build_toc_tree,
    chunk_markdown,
    chunk_tree,
    filter_min_words,
    hard_split,
)
from docmill.layout import Block, Line
from docmill.markdown import MarkdownDoc, emit

from helpers import gen_random_markdown, make_span, verify_chunker_invariants

CFG = ChunkerConfig(soft_limit_words=250, hard_limit_words=400, min_words=15)


def words(n: int, stem: str = "w") -> str:
    return " ".join(f"{stem}{i}" for i in range(n))


# -- toc tree -------------------------------------------------------------------


def test_tree_canonical_nesting():
    md = MarkdownDoc.from_text("# A\ntext\n## B\ntext2")
    root = build_toc_tree(md)
    assert root.heading_line is None
    assert len(root.children) == 1
    a = root.children[0]
    assert a.heading_text == "A"
    assert md.lines[a.content_start : a.content_end] == ["text"]
    assert len(a.children) == 1
    b = a.children[0]
    assert b.heading_text == "B"
    assert md.lines[b.content_start : b.content_end] == ["text2"]


def test_tree_without_headings_is_all_root():
    md = MarkdownDoc.from_text("just text\nmore text")
    root = build_toc_tree(md)
    assert root.children == []
    assert (root.content_start, root.content_end) == (0, 2)


def test_level_gap_attaches_to_nearest_shallower():
    md = MarkdownDoc.from_text("# A\n### C\ntext")
    root = build_toc_tree(md)
    a = root.children[0]
    assert len(a.children) == 1
    assert a.children[0].heading_text == "C"


def test_sibling_after_deep_section():
    md = MarkdownDoc.from_text("# A\n## B\ntext\n# D\ntext")
    root = build_toc_tree(md)
    assert [c.heading_text for c in root.children] == ["A", "D"]
    assert [c.heading_text for c in root.children[0].children] == ["B"]


def test_heading_inside_fence_is_content():
    md = MarkdownDoc.from_text("# A\n```\n# not a heading\n```\ntail")
    root = build_toc_tree(md)
    assert len(root.children) == 1
    a = root.children[0]
    assert a.children == []
    assert md.lines[a.content_start : a.content_end] == [
        "```",
        "# not a heading",
        "```",
        "tail",
    ]


# -- chunk_tree ------------------------------------------------------------------


def test_small_section_stays_intact():
    md = MarkdownDoc.from_text(f"# S\n{words(100)}")
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    assert len(chunks) == 1
    assert chunks[0].parent_headers == ["# S"]
    assert chunks[0].word_count == 100


def test_oversized_parent_splits_through_subsections():
    text = "\n".join(
        [
            "# Top",
            words(40, "intro"),
            "## Sub one",
            words(300, "a"),
            "## Sub two",
            words(300, "b"),
        ]
    )
    md = MarkdownDoc.from_text(text)
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    # manual trace: 640 > 250 -> parent preamble + each 300-word subsection
    assert len(chunks) == 3
    assert chunks[0].parent_headers == ["# Top"]
    assert chunks[0].word_count == 40
    assert chunks[1].parent_headers == ["# Top", "## Sub one"]
    assert chunks[2].parent_headers == ["# Top", "## Sub two"]
    assert chunks[1].word_count == chunks[2].word_count == 300


def test_empty_parent_yields_no_chunk():
    md = MarkdownDoc.from_text(f"# A\n## B\n{words(200)}")
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    assert len(chunks) == 1
    assert chunks[0].parent_headers == ["# A", "## B"]


def test_collapsed_subtree_keeps_internal_headings_in_text():
    md = MarkdownDoc.from_text(f"# A\n{words(20)}\n## B\n{words(30)}")
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    assert len(chunks) == 1
    assert "## B" in chunks[0].content_text


def test_oversized_leaf_passes_intact():
    md = MarkdownDoc.from_text(f"# Leaf\n{words(420)}")
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    assert len(chunks) == 1
    assert chunks[0].word_count == 420  # hard_split handles it later


def test_start_line_is_first_content_line():
    md = MarkdownDoc.from_text("# A\n\nfirst content\nmore")
    chunks = chunk_tree(build_toc_tree(md), md, CFG)
    assert chunks[0].start_line == 2


# -- hard_split ------------------------------------------------------------------


def test_plain_lines_pack_greedily():
    lines = [words(90, f"l{i}") for i in range(10)]  # 900 words on 10 lines
    chunk = Chunk(parent_headers=["# H"], content_lines=list(enumerate(lines)), start_line=0)
    parts = hard_split(chunk, CFG)
    assert len(parts) == 3
    assert all(p.word_count <= 400 for p in parts)
    assert all(p.parent_headers == ["# H"] for p in parts)
    # greedy packing trace: 4 lines of 90 words fit under 400, never 5
    assert [p.word_count for p in parts] == [360, 360, 180]
    assert [p.start_line for p in parts] == [0, 4, 8]


def test_table_larger_than_limit_stays_whole():
    table = ["| " + words(15).replace(" ", " | ") + " |" for _ in range(30)]
    content = [words(30, "pre")] + table + [words(30, "post")]
    chunk = Chunk(parent_headers=[], content_lines=list(enumerate(content)), start_line=0)
    parts = hard_split(chunk, CFG)
    owners = set()
    for part_index, part in enumerate(parts):
        for i, line in part.content_lines:
            if line.startswith("|"):
                owners.add(part_index)
    assert len(owners) == 1
    whole_table_part = parts[owners.pop()]
    assert sum(1 for _, l in whole_table_part.content_lines if l.startswith("|")) == 30


def test_under_limit_chunk_unchanged():
    chunk = Chunk(parent_headers=["# H"], content_lines=[(0, words(300))], start_line=0)
    assert hard_split(chunk, CFG) == [chunk]


def test_fenced_code_stays_whole():
    fence = ["```"] + [f"    code line {i} alpha beta" for i in range(90)] + ["```"]
    content = [words(200, "pre")] + fence + [words(200, "post")]
    chunk = Chunk(parent_headers=[], content_lines=list(enumerate(content)), start_line=0)
    parts = hard_split(chunk, CFG)
    for part in parts:
        markers = sum(1 for _, l in part.content_lines if l.strip().startswith("```"))
        assert markers in (0, 2)


# -- filter, pages, end-to-end ------------------------------------------------------


def test_min_words_filter():
    small = Chunk(parent_headers=[], content_lines=[(0, words(5))], start_line=0)
    exact = Chunk(parent_headers=[], content_lines=[(1, words(15))], start_line=1)
    assert filter_min_words([small, exact], CFG) == [exact]
    assert filter_min_words([], CFG) == []


def test_headers_do_not_rescue_small_chunks():
    chunk = Chunk(
        parent_headers=["# A long heading with many words indeed here"],
        content_lines=[(0, words(5))],
        start_line=0,
    )
    assert filter_min_words([chunk], CFG) == []


def test_attach_pages_from_provenance():
    blocks = []
    for page, text in [(2, "page two words here"), (3, "page three words here")]:
        span = make_span(page, 72, 80, text, size=11)
        line = Line(spans=(span,), bbox=span.bbox, page_index=page)
        blocks.append(Block(lines=(line,), bbox=span.bbox, page_index=page))
    md = emit(blocks, [], [], None)
    chunks = [
        Chunk(
            parent_headers=[],
            content_lines=[(i, l) for i, l in enumerate(md.lines) if l.strip()],
            start_line=0,
        )
    ]
    attached = attach_pages(chunks, md)
    assert (attached[0].start_page, attached[0].end_page) == (2, 3)


def test_plain_markdown_keeps_pages_unset():
    md = MarkdownDoc.from_text(f"# A\n{words(60)}")
    chunks = chunk_markdown(md, CFG)
    assert chunks and chunks[0].start_page is None and chunks[0].end_page is None


def test_single_page_chunk():
    span = make_span(0, 72, 80, "sixteen words " * 8, size=11)
    line = Line(spans=(span,), bbox=span.bbox, page_index=0)
    block = Block(lines=(line,), bbox=span.bbox, page_index=0)
    md = emit([block], [], [], None)
    chunks = chunk_markdown(md, CFG)
    assert (chunks[0].start_page, chunks[0].end_page) == (0, 0)


# -- randomized invariants -----------------------------------------------------------


def test_invariants_over_random_documents():
    rng = random.Random(20260808)
    for _ in range(150):
        verify_chunker_invariants(gen_random_markdown(rng), CFG)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_invariants_hypothesis_seeds(seed):
    verify_chunker_invariants(gen_random_markdown(random.Random(seed)), CFG)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.integers(min_value=16, max_value=120),
    st.integers(min_value=1, max_value=15),
)
def test_invariants_hold_for_other_limits(seed, soft, min_words):
    cfg = ChunkerConfig(
        soft_limit_words=soft, hard_limit_words=soft + 50, min_words=min_words
    )
    verify_chunker_invariants(gen_random_markdown(random.Random(seed)), cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        ChunkerConfig(soft_limit_words=100, hard_limit_words=50, min_words=10)
    with pytest.raises(ValueError):
        ChunkerConfig(soft_limit_words=100, hard_limit_words=200, min_words=0)
    with pytest.raises(ValueError):
        ChunkerConfig(soft_limit_words=10, hard_limit_words=200, min_words=10)
