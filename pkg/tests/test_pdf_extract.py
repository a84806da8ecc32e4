"""Extraction backend tests against PDFs generated with reportlab."""

from __future__ import annotations

import pytest
from reportlab.lib import pdfencrypt
from reportlab.pdfgen import canvas

from docmill.errors import EncryptedPdfError, MalformedPdfError
from docmill.pdf import extract_raw

from helpers import PageSpec, TextItem, build_pdf


def test_empty_page_yields_no_spans(tmp_path):
    path = build_pdf(tmp_path / "empty.pdf", [PageSpec()])
    doc = extract_raw(path)
    assert doc.page_count == 1
    assert doc.spans == ()
    assert doc.segments == ()
    assert doc.links == ()
    assert doc.metadata_toc is None


def test_hello_span_round_trip(tmp_path):
    path = build_pdf(
        tmp_path / "hello.pdf",
        [PageSpec(texts=[TextItem("Hello", 72, 100, "Helvetica", 12.0)])],
    )
    doc = extract_raw(path)
    assert len(doc.spans) == 1
    span = doc.spans[0]
    assert span.text == "Hello"
    assert span.font_size == pytest.approx(12.0)
    assert span.font_name == "Helvetica"
    assert span.page_index == 0
    # drawn 100pt from the top; the bbox must straddle that baseline
    assert span.bbox.y0 < 100.0 < span.bbox.y1
    assert span.bbox.x0 == pytest.approx(72.0)


def test_font_style_flags(tmp_path):
    path = build_pdf(
        tmp_path / "styles.pdf",
        [
            PageSpec(
                texts=[
                    TextItem("plain", 72, 100, "Helvetica", 11),
                    TextItem("bolded", 72, 130, "Helvetica-Bold", 11),
                    TextItem("slanted", 72, 160, "Helvetica-Oblique", 11),
                    TextItem("typewriter", 72, 190, "Courier", 11),
                ]
            )
        ],
    )
    by_text = {s.text: s for s in extract_raw(path).spans}
    assert not by_text["plain"].bold and not by_text["plain"].italic
    assert by_text["bolded"].bold
    assert by_text["slanted"].italic
    assert by_text["typewriter"].monospaced


def test_outline_becomes_metadata_toc(tmp_path):
    path = build_pdf(
        tmp_path / "outlined.pdf",
        [
            PageSpec(texts=[TextItem("Intro body", 72, 100)]),
            PageSpec(texts=[TextItem("Deep body", 72, 100)]),
        ],
        outline=[("Intro", 1, 0), ("Details", 2, 1)],
    )
    doc = extract_raw(path)
    assert doc.metadata_toc is not None
    assert [(t.title, t.level, t.page_index) for t in doc.metadata_toc] == [
        ("Intro", 1, 0),
        ("Details", 2, 1),
    ]


def test_links_extracted_with_top_left_coords(tmp_path):
    path = build_pdf(
        tmp_path / "linked.pdf",
        [
            PageSpec(
                texts=[TextItem("click here", 72, 100, "Helvetica", 12)],
                links=[(70, 88, 140, 104, "https://example.com/doc")],
            )
        ],
    )
    doc = extract_raw(path)
    assert len(doc.links) == 1
    link = doc.links[0]
    assert link.uri == "https://example.com/doc"
    assert link.bbox.y0 == pytest.approx(88.0)
    assert link.bbox.y1 == pytest.approx(104.0)


def test_drawn_line_becomes_segment(tmp_path):
    path = build_pdf(
        tmp_path / "ruled.pdf",
        [PageSpec(lines=[(100, 300, 400, 300)])],
    )
    doc = extract_raw(path)
    assert len(doc.segments) == 1
    seg = doc.segments[0]
    assert seg.p0[1] == pytest.approx(300.0)
    assert seg.p1[1] == pytest.approx(300.0)
    assert abs(seg.p1[0] - seg.p0[0]) == pytest.approx(300.0)


def test_spans_sorted_by_page_then_position(tmp_path):
    path = build_pdf(
        tmp_path / "order.pdf",
        [
            PageSpec(
                texts=[
                    TextItem("lower", 72, 500),
                    TextItem("upper-right", 300, 120),
                    TextItem("upper-left", 72, 120),
                ]
            ),
            PageSpec(texts=[TextItem("second page", 72, 120)]),
        ],
    )
    doc = extract_raw(path)
    keys = [(s.page_index, s.bbox.y0, s.bbox.x0) for s in doc.spans]
    assert keys == sorted(keys)
    assert [s.text for s in doc.spans] == [
        "upper-left",
        "upper-right",
        "lower",
        "second page",
    ]


def test_extraction_is_deterministic(tmp_path):
    path = build_pdf(
        tmp_path / "same.pdf",
        [PageSpec(texts=[TextItem("alpha", 72, 100), TextItem("beta", 72, 130)])],
    )
    assert extract_raw(path) == extract_raw(path)


def test_whitespace_only_spans_dropped(tmp_path):
    path = build_pdf(
        tmp_path / "ws.pdf",
        [PageSpec(texts=[TextItem("   ", 72, 100), TextItem("kept", 72, 130)])],
    )
    doc = extract_raw(path)
    assert [s.text for s in doc.spans] == ["kept"]


def test_encrypted_pdf_rejected(tmp_path):
    path = tmp_path / "locked.pdf"
    enc = pdfencrypt.StandardEncryption("secret")
    c = canvas.Canvas(str(path), encrypt=enc)
    c.drawString(72, 700, "hidden")
    c.save()
    with pytest.raises(EncryptedPdfError):
        extract_raw(path)


def test_garbage_file_rejected(tmp_path):
    path = tmp_path / "junk.pdf"
    path.write_bytes(b"this is not a pdf at all" * 10)
    with pytest.raises(MalformedPdfError):
        extract_raw(path)


def test_truncated_pdf_rejected(tmp_path):
    good = build_pdf(
        tmp_path / "good.pdf", [PageSpec(texts=[TextItem("text", 72, 100)])]
    )
    bad = tmp_path / "cut.pdf"
    bad.write_bytes(good.read_bytes()[:60])
    with pytest.raises(MalformedPdfError):
        extract_raw(bad)


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        extract_raw(tmp_path / "nope.pdf")


def test_rotated_text_tagged(tmp_path):
    path = tmp_path / "rot.pdf"
    c = canvas.Canvas(str(path))
    c.drawString(72, 700, "straight")
    c.saveState()
    c.translate(300, 400)
    c.rotate(90)
    c.drawString(0, 0, "sideways")
    c.restoreState()
    c.save()
    doc = extract_raw(path)
    flags = {s.text: s.rotated for s in doc.spans}
    assert flags["straight"] is False
    assert flags["sideways"] is True


def test_multiple_spans_on_one_line_stay_separate_formats(tmp_path):
    path = tmp_path / "mix.pdf"
    c = canvas.Canvas(str(path))
    text = c.beginText(72, 700)
    text.setFont("Helvetica", 11)
    text.textOut("normal and ")
    text.setFont("Helvetica-Bold", 11)
    text.textOut("strong")
    c.drawText(text)
    c.save()
    doc = extract_raw(path)
    assert [s.text for s in doc.spans] == ["normal and", "strong"]
    assert [s.bold for s in doc.spans] == [False, True]


def test_xref_stream_and_object_stream_pdf(tmp_path):
    """A hand-built PDF 1.5 file: catalog/pages/page/font live in an
    object stream, indexed by a cross-reference stream."""
    import zlib

    def obj_bytes(num, body):
        return f"{num} 0 obj\n".encode() + body + b"\nendobj\n"

    content_raw = b"BT /F1 12 Tf 1 0 0 1 72 700 Tm (Packed) Tj ET"

    inner = {
        1: b"<< /Type /Catalog /Pages 2 0 R >>",
        2: b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        3: (
            b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
            b"/Contents 4 0 R /Resources << /Font << /F1 5 0 R >> >> >>"
        ),
        5: b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>",
    }
    header_parts = []
    body_parts = []
    offset = 0
    for num, body in inner.items():
        header_parts.append(f"{num} {offset}")
        body_parts.append(body)
        offset += len(body) + 1
    objstm_header = (" ".join(header_parts) + "\n").encode()
    objstm_payload = objstm_header + b"\n".join(body_parts) + b"\n"
    objstm_data = zlib.compress(objstm_payload)

    pieces = [b"%PDF-1.5\n"]
    offsets = {}

    def add(num, body):
        offsets[num] = sum(len(p) for p in pieces)
        pieces.append(obj_bytes(num, body))

    add(4, b"<< /Length %d >>\nstream\n" % len(content_raw) + content_raw + b"\nendstream")
    add(
        6,
        b"<< /Type /ObjStm /N 4 /First %d /Filter /FlateDecode /Length %d >>\nstream\n"
        % (len(objstm_header), len(objstm_data))
        + objstm_data
        + b"\nendstream",
    )

    xref_pos = sum(len(p) for p in pieces)
    rows = []
    entries = {
        1: (2, 6, 0),  # in object stream 6, index 0
        2: (2, 6, 1),
        3: (2, 6, 2),
        4: (1, offsets[4], 0),
        5: (2, 6, 3),
        6: (1, offsets[6], 0),
        7: (1, xref_pos, 0),
    }
    rows.append(bytes([0]) + (0).to_bytes(4, "big") + (65535).to_bytes(2, "big"))
    for num in range(1, 8):
        kind, a, b = entries[num]
        rows.append(bytes([kind]) + a.to_bytes(4, "big") + b.to_bytes(2, "big"))
    xref_data = zlib.compress(b"".join(rows))
    pieces.append(
        obj_bytes(
            7,
            b"<< /Type /XRef /Size 8 /W [1 4 2] /Root 1 0 R /Filter /FlateDecode /Length %d >>\nstream\n"
            % len(xref_data)
            + xref_data
            + b"\nendstream",
        )
    )
    pieces.append(b"startxref\n%d\n%%%%EOF\n" % xref_pos)

    path = tmp_path / "packed.pdf"
    path.write_bytes(b"".join(pieces))

    doc = extract_raw(path)
    assert doc.page_count == 1
    assert [s.text for s in doc.spans] == ["Packed"]
    assert doc.spans[0].font_size == pytest.approx(12.0)


def test_unicode_text_through_winansi(tmp_path):
    path = build_pdf(
        tmp_path / "uni.pdf",
        [PageSpec(texts=[TextItem("café résumé — naïve", 72, 100, "Helvetica", 12)])],
    )
    doc = extract_raw(path)
    assert doc.spans[0].text == "café résumé — naïve"


def test_incremental_update_prev_chain(tmp_path):
    """An appended revision adds one more text object; the xref /Prev
    chain must surface both the old and the new content."""
    base_path = build_pdf(
        tmp_path / "base.pdf",
        [PageSpec(texts=[TextItem("original text", 72, 100, "Helvetica", 12)])],
    )
    base = base_path.read_bytes()

    import re as _re

    # locate the original page object (nearest object header above the
    # "/Type /Page" marker) and the xref offset
    marker = base.index(b"/Type /Page")
    headers = [
        m for m in _re.finditer(rb"(\d+) 0 obj", base) if m.start() < marker
    ]
    page_match = headers[-1]
    page_num = int(page_match.group(1))
    startxref = int(_re.findall(rb"startxref\s+(\d+)", base)[-1])
    size = int(_re.search(rb"/Size (\d+)", base).group(1))

    page_start = page_match.start()
    page_end = base.index(b"endobj", page_start) + len(b"endobj")
    page_src = base[page_start:page_end].decode("latin-1")

    new_content_num = size
    extra = f"""\n{new_content_num} 0 obj\n<< /Length 58 >>\nstream\nBT /F1 12 Tf 1 0 0 1 72 660 Tm (added in revision two) Tj ET\nendstream\nendobj\n"""
    # page object rewritten with an array of content streams
    updated_page = _re.sub(
        r"/Contents (\d+) 0 R",
        rf"/Contents [\g<1> 0 R {new_content_num} 0 R]",
        page_src,
    )

    out = bytearray(base)
    offsets = {}
    offsets[new_content_num] = len(out) + 1
    out += extra.encode("latin-1")
    offsets[page_num] = len(out)
    out += (updated_page + "\n").encode("latin-1")
    xref_pos = len(out)
    out += (
        f"xref\n0 1\n0000000000 65535 f \n"
        f"{page_num} 1\n{offsets[page_num]:010d} 00000 n \n"
        f"{new_content_num} 1\n{offsets[new_content_num]:010d} 00000 n \n"
        f"trailer\n<< /Size {size + 1} /Root 6 0 R /Prev {startxref} >>\n"
        f"startxref\n{xref_pos}\n%%EOF\n"
    ).encode("latin-1")

    # the original trailer's /Root reference must be preserved
    root_num = int(_re.search(rb"/Root (\d+) 0 R", base).group(1))
    out = out.replace(b"/Root 6 0 R", b"/Root %d 0 R" % root_num)

    updated = tmp_path / "updated.pdf"
    updated.write_bytes(bytes(out))
    doc = extract_raw(updated)
    texts = [s.text for s in doc.spans]
    assert "original text" in texts
    assert "added in revision two" in texts
