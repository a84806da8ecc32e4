"""Content stream interpreter: turns page operators into positioned text
pieces and stroked line segments (all in native PDF device coordinates,
bottom-left origin)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

from docmill.pdf.document import PdfFile, PdfStream
from docmill.pdf.fonts import FontInfo, resolve_font, _FALLBACK
from docmill.pdf.objects import Lexer, PdfName

logger = logging.getLogger(__name__)

Matrix = tuple[float, float, float, float, float, float]
IDENTITY: Matrix = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

# gaps at least this many ems between pieces on one line read as a space
SPACE_GAP_EM = 0.15


def mat_mul(first: Matrix, second: Matrix) -> Matrix:
    a1, b1, c1, d1, e1, f1 = first
    a2, b2, c2, d2, e2, f2 = second
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


def mat_apply(m: Matrix, x: float, y: float) -> tuple[float, float]:
    a, b, c, d, e, f = m
    return (a * x + c * y + e, b * x + d * y + f)


def translation(tx: float, ty: float) -> Matrix:
    return (1.0, 0.0, 0.0, 1.0, tx, ty)


@dataclass
class TextPiece:
    """One shown string, placed in device space."""

    x: float  # pen start, device coords
    y: float  # baseline, device coords
    width: float  # advance in device units
    text: str
    font: FontInfo
    size: float  # effective (device) font size
    rotated: bool


@dataclass
class RawSegment:
    p0: tuple[float, float]
    p1: tuple[float, float]
    width: float


@dataclass
class _TextState:
    font: FontInfo
    size: float = 0.0
    char_spacing: float = 0.0
    word_spacing: float = 0.0
    h_scale: float = 1.0
    leading: float = 0.0
    rise: float = 0.0


class PageInterpreter:
    """Executes one page's content stream(s)."""

    def __init__(self, pdf: PdfFile, resources: Any) -> None:
        self.pdf = pdf
        self.pieces: list[TextPiece] = []
        self.segments: list[RawSegment] = []
        self._font_cache: dict[int, FontInfo] = {}
        self._resources_stack: list[dict[str, Any]] = [self._as_dict(resources)]

    def _as_dict(self, obj: Any) -> dict[str, Any]:
        obj = self.pdf.resolve(obj)
        return obj if isinstance(obj, dict) else {}

    def run(self, content: bytes, depth: int = 0) -> None:
        ctm_stack: list[Matrix] = [IDENTITY]
        lw_stack: list[float] = [1.0]
        ts = _TextState(font=_FALLBACK)
        ts_stack: list[_TextState] = []
        tm: Matrix = IDENTITY
        tlm: Matrix = IDENTITY
        in_text = False
        path: list[tuple[tuple[float, float], tuple[float, float]]] = []
        rects: list[tuple[float, float, float, float]] = []
        current: tuple[float, float] | None = None
        subpath_start: tuple[float, float] | None = None

        lexer = Lexer(content)
        stack: list[Any] = []

        def num(value: Any, default: float = 0.0) -> float:
            return float(value) if isinstance(value, (int, float)) else default

        def flush_path(stroke: bool, fill: bool) -> None:
            nonlocal path, rects, current, subpath_start
            ctm = ctm_stack[-1]
            scale = (abs(ctm[0]) + abs(ctm[3])) / 2.0 or 1.0
            if stroke:
                for p0, p1 in path:
                    self.segments.append(
                        RawSegment(mat_apply(ctm, *p0), mat_apply(ctm, *p1), lw_stack[-1] * scale)
                    )
                for x, y, w, h in rects:
                    corners = [(x, y), (x + w, y), (x + w, y + h), (x, y + h), (x, y)]
                    for p0, p1 in zip(corners, corners[1:]):
                        self.segments.append(
                            RawSegment(
                                mat_apply(ctm, *p0), mat_apply(ctm, *p1), lw_stack[-1] * scale
                            )
                        )
            if fill and not stroke:
                # thin filled rectangles are how many writers draw rules
                for x, y, w, h in rects:
                    (dx0, dy0) = mat_apply(ctm, x, y)
                    (dx1, dy1) = mat_apply(ctm, x + w, y + h)
                    dw, dh = abs(dx1 - dx0), abs(dy1 - dy0)
                    if min(dw, dh) <= 3.0 and max(dw, dh) > 4.0:
                        cx, cy = (dx0 + dx1) / 2.0, (dy0 + dy1) / 2.0
                        if dw >= dh:
                            self.segments.append(
                                RawSegment((dx0, cy), (dx1, cy), max(dh, 0.1))
                            )
                        else:
                            self.segments.append(
                                RawSegment((cx, dy0), (cx, dy1), max(dw, 0.1))
                            )
            path, rects = [], []
            current = subpath_start = None

        def show(raw: bytes) -> None:
            nonlocal tm
            if not isinstance(raw, bytes) or ts.size == 0:
                return
            combined = mat_mul(tm, ctm_stack[-1])
            sx = (combined[0] ** 2 + combined[1] ** 2) ** 0.5
            sy = (combined[2] ** 2 + combined[3] ** 2) ** 0.5
            upright = (
                abs(combined[1]) <= 0.02 * max(sx, 1e-9)
                and abs(combined[2]) <= 0.02 * max(sy, 1e-9)
                and combined[0] > 0
                and combined[3] > 0
            )
            x0, y0 = mat_apply(combined, 0.0, ts.rise)
            chars: list[str] = []
            advance = 0.0
            for code, ch in ts.font.decode(raw):
                w = ts.font.width_of(code) / 1000.0 * ts.size
                w += ts.char_spacing
                if code == 32 and not ts.font.two_byte:
                    w += ts.word_spacing
                advance += w * ts.h_scale
                chars.append(ch)
            text = "".join(chars)
            if text:
                self.pieces.append(
                    TextPiece(
                        x=x0,
                        y=y0,
                        width=advance * sx,
                        text=text,
                        font=ts.font,
                        size=ts.size * sy,
                        rotated=not upright,
                    )
                )
            tm = mat_mul(translation(advance, 0.0), tm)

        def newline() -> None:
            nonlocal tm, tlm
            tlm = mat_mul(translation(0.0, -ts.leading), tlm)
            tm = tlm

        while True:
            lexer.skip_whitespace()
            if lexer.at_end():
                break
            try:
                obj = lexer.parse_object()
            except Exception:
                break
            if not isinstance(obj, str):
                stack.append(obj)
                if len(stack) > 32:
                    del stack[:-32]
                continue

            op = obj
            if op == "q":
                ctm_stack.append(ctm_stack[-1])
                lw_stack.append(lw_stack[-1])
                ts_stack.append(_TextState(**vars(ts)))
            elif op == "Q":
                if len(ctm_stack) > 1:
                    ctm_stack.pop()
                    lw_stack.pop()
                    ts = ts_stack.pop() if ts_stack else ts
            elif op == "cm" and len(stack) >= 6:
                m = tuple(num(v) for v in stack[-6:])
                ctm_stack[-1] = mat_mul(m, ctm_stack[-1])  # type: ignore[arg-type]
            elif op == "w" and stack:
                lw_stack[-1] = num(stack[-1], 1.0)
            elif op == "BT":
                in_text = True
                tm = tlm = IDENTITY
            elif op == "ET":
                in_text = False
            elif op == "Tf" and len(stack) >= 2:
                ts.size = num(stack[-1])
                ts.font = self._lookup_font(stack[-2])
            elif op == "Td" and len(stack) >= 2:
                tlm = mat_mul(translation(num(stack[-2]), num(stack[-1])), tlm)
                tm = tlm
            elif op == "TD" and len(stack) >= 2:
                ts.leading = -num(stack[-1])
                tlm = mat_mul(translation(num(stack[-2]), num(stack[-1])), tlm)
                tm = tlm
            elif op == "Tm" and len(stack) >= 6:
                tm = tlm = tuple(num(v) for v in stack[-6:])  # type: ignore[assignment]
            elif op == "T*":
                newline()
            elif op == "TL" and stack:
                ts.leading = num(stack[-1])
            elif op == "Tc" and stack:
                ts.char_spacing = num(stack[-1])
            elif op == "Tw" and stack:
                ts.word_spacing = num(stack[-1])
            elif op == "Tz" and stack:
                ts.h_scale = num(stack[-1], 100.0) / 100.0
            elif op == "Ts" and stack:
                ts.rise = num(stack[-1])
            elif op == "Tj" and stack:
                show(stack[-1] if isinstance(stack[-1], bytes) else b"")
            elif op == "'" and stack:
                newline()
                show(stack[-1] if isinstance(stack[-1], bytes) else b"")
            elif op == '"' and len(stack) >= 3:
                ts.word_spacing = num(stack[-3])
                ts.char_spacing = num(stack[-2])
                newline()
                show(stack[-1] if isinstance(stack[-1], bytes) else b"")
            elif op == "TJ" and stack and isinstance(stack[-1], list):
                for item in stack[-1]:
                    if isinstance(item, bytes):
                        show(item)
                    elif isinstance(item, (int, float)):
                        shift = -float(item) / 1000.0 * ts.size * ts.h_scale
                        if shift >= SPACE_GAP_EM * ts.size and self.pieces:
                            last = self.pieces[-1]
                            if not last.text.endswith(" "):
                                last.text += " "
                                last.width += shift * (
                                    (ctm_stack[-1][0] ** 2 + ctm_stack[-1][1] ** 2) ** 0.5
                                )
                        tm = mat_mul(translation(shift, 0.0), tm)
            elif op == "m" and len(stack) >= 2:
                current = (num(stack[-2]), num(stack[-1]))
                subpath_start = current
            elif op == "l" and len(stack) >= 2:
                point = (num(stack[-2]), num(stack[-1]))
                if current is not None:
                    path.append((current, point))
                current = point
            elif op in ("c", "v", "y"):
                # curves are irrelevant for ruling lines; just move the pen
                if len(stack) >= 2:
                    current = (num(stack[-2]), num(stack[-1]))
            elif op == "re" and len(stack) >= 4:
                x, y, w, h = (num(v) for v in stack[-4:])
                rects.append((x, y, w, h))
                current = subpath_start = (x, y)
            elif op == "h":
                if current is not None and subpath_start is not None and current != subpath_start:
                    path.append((current, subpath_start))
                    current = subpath_start
            elif op in ("S", "s"):
                if op == "s" and current is not None and subpath_start is not None:
                    if current != subpath_start:
                        path.append((current, subpath_start))
                flush_path(stroke=True, fill=False)
            elif op in ("B", "B*", "b", "b*"):
                flush_path(stroke=True, fill=True)
            elif op in ("f", "F", "f*"):
                flush_path(stroke=False, fill=True)
            elif op == "n":
                path, rects = [], []
                current = subpath_start = None
            elif op == "Do" and stack:
                self._run_xobject(stack[-1], ctm_stack[-1], depth)
            elif op == "BI":
                end = content.find(b"EI", lexer.pos)
                lexer.pos = len(content) if end == -1 else end + 2
            # remaining operators (colors, clipping, marked content) are
            # irrelevant to geometry and safely ignored
            stack.clear()

    def _lookup_font(self, name_obj: Any) -> FontInfo:
        if not isinstance(name_obj, PdfName):
            return _FALLBACK
        fonts = self._as_dict(self._resources_stack[-1].get("Font"))
        ref = fonts.get(name_obj.value)
        key = id(ref) if not hasattr(ref, "num") else (ref.num << 1) | 1  # type: ignore[union-attr]
        cached = self._font_cache.get(key)
        if cached is None:
            cached = resolve_font(ref, self.pdf.resolve)
            self._font_cache[key] = cached
        return cached

    def _run_xobject(self, name_obj: Any, ctm: Matrix, depth: int) -> None:
        if depth >= 8 or not isinstance(name_obj, PdfName):
            return
        xobjects = self._as_dict(self._resources_stack[-1].get("XObject"))
        target = self.pdf.resolve(xobjects.get(name_obj.value))
        if not isinstance(target, PdfStream):
            return
        subtype = target.dict.get("Subtype")
        if not isinstance(subtype, PdfName) or subtype.value != "Form":
            return
        matrix = self.pdf.resolve(target.dict.get("Matrix"))
        inner_ctm = ctm
        if isinstance(matrix, list) and len(matrix) == 6:
            inner_ctm = mat_mul(tuple(float(v) for v in matrix), ctm)  # type: ignore[arg-type]
        resources = target.dict.get("Resources", self._resources_stack[-1])
        inner = PageInterpreter(self.pdf, resources)
        inner._font_cache = self._font_cache
        inner._run_with_base_ctm(self.pdf.stream_data(target), inner_ctm, depth + 1)
        self.pieces.extend(inner.pieces)
        self.segments.extend(inner.segments)

    def _run_with_base_ctm(self, content: bytes, base: Matrix, depth: int) -> None:
        # prepend a cm-equivalent by running with a transformed identity
        prefix = "%f %f %f %f %f %f cm\n" % base
        self.run(prefix.encode("ascii") + content, depth)
