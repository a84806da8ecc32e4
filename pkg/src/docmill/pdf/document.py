"""PDF file structure: cross-reference tables, objects and streams.

Supports classic xref tables, xref streams (PDF 1.5+), object streams,
and Flate/ASCII85/ASCIIHex stream filters — enough to read text-based
PDFs from mainstream writers. Encrypted files are rejected up front.
"""

from __future__ import annotations

import logging
import re
import zlib
from base64 import a85decode
from pathlib import Path
from typing import Any

from docmill.errors import EncryptedPdfError, MalformedPdfError
from docmill.pdf.objects import Lexer, PdfName, PdfRef

logger = logging.getLogger(__name__)

_OBJ_HEADER = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


def _apply_png_predictor(data: bytes, columns: int, colors: int, bpc: int) -> bytes:
    bpp = max(1, (colors * bpc + 7) // 8)
    row_len = (columns * colors * bpc + 7) // 8
    out = bytearray()
    prev = bytearray(row_len)
    pos = 0
    while pos + 1 + row_len <= len(data):
        tag = data[pos]
        row = bytearray(data[pos + 1 : pos + 1 + row_len])
        pos += 1 + row_len
        if tag == 1:  # Sub
            for i in range(bpp, row_len):
                row[i] = (row[i] + row[i - bpp]) & 0xFF
        elif tag == 2:  # Up
            for i in range(row_len):
                row[i] = (row[i] + prev[i]) & 0xFF
        elif tag == 3:  # Average
            for i in range(row_len):
                left = row[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + (left + prev[i]) // 2) & 0xFF
        elif tag == 4:  # Paeth
            for i in range(row_len):
                a = row[i - bpp] if i >= bpp else 0
                b = prev[i]
                c = prev[i - bpp] if i >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
                row[i] = (row[i] + pred) & 0xFF
        out.extend(row)
        prev = row
    return bytes(out)


def decode_stream(raw: bytes, stream_dict: dict[str, Any], resolve) -> bytes:
    """Apply the stream's /Filter chain. Unknown filters yield b''."""
    filters = resolve(stream_dict.get("Filter"))
    if filters is None:
        filters = []
    if isinstance(filters, PdfName):
        filters = [filters]
    parms = resolve(stream_dict.get("DecodeParms"))
    if parms is None:
        parms = [None] * len(filters)
    if isinstance(parms, dict):
        parms = [parms]
    while len(parms) < len(filters):
        parms.append(None)

    data = raw
    for filt, parm in zip(filters, parms):
        name = filt.value if isinstance(filt, PdfName) else str(filt)
        if name in ("FlateDecode", "Fl"):
            try:
                data = zlib.decompress(data)
            except zlib.error:
                try:  # tolerate trailing garbage
                    data = zlib.decompressobj().decompress(data)
                except zlib.error:
                    logger.warning("undecodable Flate stream")
                    return b""
            parm = resolve(parm)
            if isinstance(parm, dict):
                predictor = resolve(parm.get("Predictor", 1)) or 1
                if predictor >= 10:
                    data = _apply_png_predictor(
                        data,
                        int(resolve(parm.get("Columns", 1)) or 1),
                        int(resolve(parm.get("Colors", 1)) or 1),
                        int(resolve(parm.get("BitsPerComponent", 8)) or 8),
                    )
        elif name in ("ASCII85Decode", "A85"):
            text = data.strip()
            if text.startswith(b"<~"):
                text = text[2:]
            if not text.endswith(b"~>"):
                text += b"~>"
            try:
                data = a85decode(text, adobe=True, ignorechars=b" \t\n\r\x0c\x00")
            except ValueError:
                logger.warning("undecodable ASCII85 stream")
                return b""
        elif name in ("ASCIIHexDecode", "AHx"):
            text = data.split(b">")[0]
            digits = bytes(c for c in text if c not in b" \t\n\r\x0c\x00")
            if len(digits) % 2:
                digits += b"0"
            try:
                data = bytes.fromhex(digits.decode("ascii"))
            except (ValueError, UnicodeDecodeError):
                return b""
        else:
            logger.debug("skipping stream with unsupported filter %s", name)
            return b""
    return data


class PdfStream:
    def __init__(self, stream_dict: dict[str, Any], raw: bytes) -> None:
        self.dict = stream_dict
        self.raw = raw


class PdfFile:
    """Random-access reader over one PDF file."""

    def __init__(self, data: bytes) -> None:
        if not data.lstrip(b"\x00 \t\r\n").startswith(b"%PDF"):
            raise MalformedPdfError("missing %PDF header")
        self.data = data
        self.xref: dict[int, tuple[str, int, int]] = {}  # num -> (kind, a, b)
        self.trailer: dict[str, Any] = {}
        self._cache: dict[int, Any] = {}
        self._objstm_cache: dict[int, dict[int, Any]] = {}
        try:
            self._load_xref()
        except MalformedPdfError:
            raise
        except Exception as exc:
            raise MalformedPdfError(f"unreadable cross-reference data: {exc}") from exc
        if not self.xref:
            self._scan_objects()
        if "Encrypt" in self.trailer:
            raise EncryptedPdfError("document has an /Encrypt dictionary")
        if "Root" not in self.trailer:
            raise MalformedPdfError("trailer has no /Root")

    @classmethod
    def from_path(cls, path: str | Path) -> "PdfFile":
        return cls(Path(path).read_bytes())

    # -- cross-reference loading ------------------------------------------

    def _load_xref(self) -> None:
        tail = self.data[-2048:]
        m = None
        for m in re.finditer(rb"startxref\s+(\d+)", tail):
            pass
        if m is None:
            self._scan_objects()
            return
        offset = int(m.group(1))
        seen: set[int] = set()
        while offset and offset not in seen and offset < len(self.data):
            seen.add(offset)
            lexer = Lexer(self.data, offset)
            lexer.skip_whitespace()
            if self.data[lexer.pos : lexer.pos + 4] == b"xref":
                trailer = self._parse_xref_table(lexer.pos + 4)
            else:
                trailer = self._parse_xref_stream(lexer.pos)
            if not self.trailer:
                self.trailer.update(trailer)
            else:
                for key, value in trailer.items():
                    self.trailer.setdefault(key, value)
            hybrid = trailer.get("XRefStm")
            if isinstance(hybrid, int) and hybrid not in seen:
                seen.add(hybrid)
                self._parse_xref_stream(hybrid)
            prev = trailer.get("Prev")
            offset = int(prev) if isinstance(prev, (int, float)) else 0

    def _parse_xref_table(self, pos: int) -> dict[str, Any]:
        lexer = Lexer(self.data, pos)
        while True:
            lexer.skip_whitespace()
            if self.data[lexer.pos : lexer.pos + 7] == b"trailer":
                lexer.pos += 7
                trailer = lexer.parse_object()
                if not isinstance(trailer, dict):
                    raise MalformedPdfError("trailer is not a dictionary")
                return trailer
            header = lexer.read_regular_token()
            lexer.skip_whitespace()
            count_tok = lexer.read_regular_token()
            if not header.isdigit() or not count_tok.isdigit():
                raise MalformedPdfError("bad xref subsection header")
            start, count = int(header), int(count_tok)
            for i in range(count):
                lexer.skip_whitespace()
                offset_tok = lexer.read_regular_token()
                lexer.skip_whitespace()
                gen_tok = lexer.read_regular_token()
                lexer.skip_whitespace()
                kind_tok = lexer.read_regular_token()
                if not offset_tok.isdigit() or not gen_tok.isdigit():
                    raise MalformedPdfError("bad xref entry")
                num = start + i
                if kind_tok == b"n" and num not in self.xref:
                    self.xref[num] = ("file", int(offset_tok), int(gen_tok))

    def _parse_xref_stream(self, pos: int) -> dict[str, Any]:
        header = _OBJ_HEADER.match(self.data, pos)
        if header is None:
            raise MalformedPdfError("expected xref stream object")
        obj = self._parse_indirect_at(pos)
        if not isinstance(obj, PdfStream):
            raise MalformedPdfError("xref stream is not a stream")
        info = obj.dict
        data = decode_stream(obj.raw, info, self._resolve_shallow)
        widths = [int(w) for w in info.get("W", [])]
        if len(widths) < 3:
            raise MalformedPdfError("xref stream missing /W")
        size = int(info.get("Size", 0))
        index = info.get("Index", [0, size])
        row_len = sum(widths)
        pos_in = 0

        def read_field(row: bytes, start: int, width: int, default: int) -> int:
            if width == 0:
                return default
            return int.from_bytes(row[start : start + width], "big")

        pairs = [(int(index[i]), int(index[i + 1])) for i in range(0, len(index) - 1, 2)]
        for first, count in pairs:
            for i in range(count):
                if pos_in + row_len > len(data):
                    break
                row = data[pos_in : pos_in + row_len]
                pos_in += row_len
                kind = read_field(row, 0, widths[0], 1)
                f2 = read_field(row, widths[0], widths[1], 0)
                f3 = read_field(row, widths[0] + widths[1], widths[2], 0)
                num = first + i
                if num in self.xref:
                    continue
                if kind == 1:
                    self.xref[num] = ("file", f2, f3)
                elif kind == 2:
                    self.xref[num] = ("objstm", f2, f3)
        return info

    def _scan_objects(self) -> None:
        """Last-resort recovery: index every 'N G obj' in the file."""
        for m in _OBJ_HEADER.finditer(self.data):
            self.xref[int(m.group(1))] = ("file", m.start(), int(m.group(2)))
        if not self.xref:
            raise MalformedPdfError("no indirect objects found")
        if not self.trailer:
            m = re.search(rb"trailer", self.data)
            if m:
                try:
                    trailer = Lexer(self.data, m.end()).parse_object()
                    if isinstance(trailer, dict):
                        self.trailer.update(trailer)
                except Exception:
                    pass
        if "Root" not in self.trailer:
            # look for any /Type /Catalog object
            for num in self.xref:
                try:
                    obj = self.get_object(num)
                except Exception:
                    continue
                if isinstance(obj, dict) and _name(obj.get("Type")) == "Catalog":
                    self.trailer["Root"] = PdfRef(num, 0)
                    break

    # -- object access -----------------------------------------------------

    def _parse_indirect_at(self, pos: int) -> Any:
        header = _OBJ_HEADER.match(self.data, pos)
        if header is None:
            # some writers pad with whitespace before the header
            header = _OBJ_HEADER.search(self.data, pos, pos + 64)
            if header is None:
                raise MalformedPdfError(f"no object header at offset {pos}")
        lexer = Lexer(self.data, header.end())
        obj = lexer.parse_object()
        if isinstance(obj, dict):
            lexer.skip_whitespace()
            if self.data[lexer.pos : lexer.pos + 6] == b"stream":
                lexer.pos += 6
                if self.data[lexer.pos : lexer.pos + 2] == b"\r\n":
                    lexer.pos += 2
                elif self.data[lexer.pos : lexer.pos + 1] in (b"\n", b"\r"):
                    lexer.pos += 1
                length = self.resolve(obj.get("Length"))
                start = lexer.pos
                raw: bytes | None = None
                if isinstance(length, (int, float)) and length >= 0:
                    end = start + int(length)
                    if end <= len(self.data):
                        tail = self.data[end : end + 16].lstrip(b"\r\n\t ")
                        if not tail or tail.startswith(b"endstream"):
                            raw = self.data[start:end]
                if raw is None:
                    stop = self.data.find(b"endstream", start)
                    raw = self.data[start : stop if stop != -1 else len(self.data)]
                    raw = raw.rstrip(b"\r\n")
                return PdfStream(obj, raw)
        return obj

    def _load_objstm(self, num: int) -> dict[int, Any]:
        if num in self._objstm_cache:
            return self._objstm_cache[num]
        container = self.get_object(num)
        objects: dict[int, Any] = {}
        if isinstance(container, PdfStream):
            data = decode_stream(container.raw, container.dict, self.resolve)
            count = int(self.resolve(container.dict.get("N", 0)) or 0)
            first = int(self.resolve(container.dict.get("First", 0)) or 0)
            head = Lexer(data, 0)
            offsets = []
            for _ in range(count):
                head.skip_whitespace()
                onum = head.read_regular_token()
                head.skip_whitespace()
                ooff = head.read_regular_token()
                if not onum.isdigit() or not ooff.isdigit():
                    break
                offsets.append((int(onum), int(ooff)))
            for onum, ooff in offsets:
                try:
                    objects[onum] = Lexer(data, first + ooff).parse_object()
                except Exception:
                    objects[onum] = None
        self._objstm_cache[num] = objects
        return objects

    def get_object(self, num: int) -> Any:
        if num in self._cache:
            return self._cache[num]
        entry = self.xref.get(num)
        obj: Any = None
        if entry is not None:
            kind, a, _b = entry
            try:
                if kind == "file":
                    obj = self._parse_indirect_at(a)
                else:
                    obj = self._load_objstm(a).get(num)
            except MalformedPdfError:
                obj = None
            except Exception:
                obj = None
        self._cache[num] = obj
        return obj

    def resolve(self, obj: Any) -> Any:
        seen = 0
        while isinstance(obj, PdfRef):
            obj = self.get_object(obj.num)
            seen += 1
            if seen > 32:
                return None
        return obj

    def _resolve_shallow(self, obj: Any) -> Any:
        # used while the xref is still being built: only direct objects
        return obj if not isinstance(obj, PdfRef) else None

    # -- document structure -------------------------------------------------

    def catalog(self) -> dict[str, Any]:
        root = self.resolve(self.trailer.get("Root"))
        if not isinstance(root, dict):
            raise MalformedPdfError("catalog missing or invalid")
        return root

    def pages(self) -> list[dict[str, Any]]:
        """Flattened page dictionaries with inherited attributes applied."""
        catalog = self.catalog()
        root = self.resolve(catalog.get("Pages"))
        if not isinstance(root, dict):
            raise MalformedPdfError("page tree missing")
        inheritable = ("Resources", "MediaBox", "Rotate", "CropBox")
        pages: list[dict[str, Any]] = []
        stack: list[tuple[Any, dict[str, Any]]] = [(root, {})]
        visited: set[int] = set()
        while stack and len(pages) < 50_000:
            node, inherited = stack.pop()
            node = self.resolve(node)
            if not isinstance(node, dict):
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            merged = dict(inherited)
            for key in inheritable:
                if key in node:
                    merged[key] = node[key]
            node_type = _name(node.get("Type"))
            kids = self.resolve(node.get("Kids"))
            if node_type == "Pages" or (node_type is None and isinstance(kids, list)):
                if isinstance(kids, list):
                    for kid in reversed(kids):
                        stack.append((kid, merged))
            else:
                page = dict(node)
                page.update({k: v for k, v in merged.items() if k not in page})
                pages.append(page)
        return pages

    def page_ref_index(self) -> dict[tuple[int, int], int]:
        """Map (objnum, gen) of each page object to its 0-based index."""
        catalog = self.catalog()
        root = catalog.get("Pages")
        index: dict[tuple[int, int], int] = {}
        counter = 0
        stack: list[Any] = [root]
        visited: set[int] = set()
        while stack:
            ref = stack.pop()
            node = self.resolve(ref)
            if not isinstance(node, dict) or id(node) in visited:
                continue
            visited.add(id(node))
            kids = self.resolve(node.get("Kids"))
            node_type = _name(node.get("Type"))
            if node_type == "Pages" or (node_type is None and isinstance(kids, list)):
                if isinstance(kids, list):
                    for kid in reversed(kids):
                        stack.append(kid)
            else:
                if isinstance(ref, PdfRef):
                    index[(ref.num, ref.gen)] = counter
                counter += 1
        return index

    def stream_data(self, obj: Any) -> bytes:
        obj = self.resolve(obj)
        if isinstance(obj, PdfStream):
            return decode_stream(obj.raw, obj.dict, self.resolve)
        return b""

    def content_bytes(self, page: dict[str, Any]) -> bytes:
        contents = self.resolve(page.get("Contents"))
        if isinstance(contents, list):
            return b"\n".join(self.stream_data(c) for c in contents)
        if contents is None:
            return b""
        return self.stream_data(contents)


def _name(obj: Any) -> str | None:
    return obj.value if isinstance(obj, PdfName) else None
