"""Tokenizer and object parser for the PDF syntax subset we read.

Handles numbers, names, literal/hex strings, arrays, dictionaries,
booleans, null, indirect references and comments. Streams are handled one
level up (they need the xref table to resolve /Length).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

WHITESPACE = b"\x00\t\n\x0c\r "
DELIMITERS = b"()<>[]{}/%"


@dataclass(frozen=True)
class PdfName:
    value: str

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"/{self.value}"


@dataclass(frozen=True)
class PdfRef:
    num: int
    gen: int


class Lexer:
    """Byte cursor with PDF token primitives."""

    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def peek(self) -> int:
        return self.data[self.pos] if self.pos < len(self.data) else -1

    def skip_whitespace(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            byte = data[self.pos]
            if byte in WHITESPACE:
                self.pos += 1
            elif byte == 0x25:  # '%' comment to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def read_regular_token(self) -> bytes:
        """Read a run of non-delimiter, non-whitespace bytes."""
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n:
            byte = data[self.pos]
            if byte in WHITESPACE or byte in DELIMITERS:
                break
            self.pos += 1
        return data[start : self.pos]

    def read_name(self) -> PdfName:
        assert self.data[self.pos] == 0x2F  # '/'
        self.pos += 1
        raw = self.read_regular_token()
        if b"#" in raw:
            out = bytearray()
            i = 0
            while i < len(raw):
                if raw[i] == 0x23 and i + 2 < len(raw):
                    try:
                        out.append(int(raw[i + 1 : i + 3], 16))
                        i += 3
                        continue
                    except ValueError:
                        pass
                out.append(raw[i])
                i += 1
            raw = bytes(out)
        return PdfName(raw.decode("latin-1"))

    def read_literal_string(self) -> bytes:
        assert self.data[self.pos] == 0x28  # '('
        self.pos += 1
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            byte = data[self.pos]
            if byte == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                esc = data[self.pos]
                self.pos += 1
                if esc in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[esc])
                elif esc in b"()\\":
                    out.append(esc)
                elif 0x30 <= esc <= 0x37:  # octal, up to 3 digits
                    digits = [esc - 0x30]
                    while (
                        len(digits) < 3
                        and self.pos < n
                        and 0x30 <= data[self.pos] <= 0x37
                    ):
                        digits.append(data[self.pos] - 0x30)
                        self.pos += 1
                    code = 0
                    for d in digits:
                        code = code * 8 + d
                    out.append(code & 0xFF)
                elif esc in b"\r\n":  # line continuation
                    if esc == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                # unknown escapes drop the backslash
                else:
                    out.append(esc)
                continue
            if byte == 0x28:
                depth += 1
            elif byte == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return bytes(out)
            out.append(byte)
            self.pos += 1
        return bytes(out)

    def read_hex_string(self) -> bytes:
        assert self.data[self.pos] == 0x3C  # '<'
        self.pos += 1
        digits = []
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] != 0x3E:
            byte = data[self.pos]
            if byte not in WHITESPACE:
                digits.append(chr(byte))
            self.pos += 1
        self.pos += 1  # '>'
        if len(digits) % 2:
            digits.append("0")
        try:
            return bytes.fromhex("".join(digits))
        except ValueError:
            return b""

    def parse_object(self) -> Any:
        """Parse the next object at the cursor. Returns None for 'null'."""
        self.skip_whitespace()
        if self.at_end():
            raise ValueError("unexpected end of data")
        byte = self.peek()
        if byte == 0x2F:
            return self.read_name()
        if byte == 0x28:
            return self.read_literal_string()
        if byte == 0x3C:
            if self.data[self.pos : self.pos + 2] == b"<<":
                return self._parse_dict()
            return self.read_hex_string()
        if byte == 0x5B:  # '['
            self.pos += 1
            items = []
            while True:
                self.skip_whitespace()
                if self.at_end():
                    break
                if self.peek() == 0x5D:  # ']'
                    self.pos += 1
                    break
                items.append(self.parse_object())
            return items
        token = self.read_regular_token()
        if not token:
            # stray delimiter; skip it to avoid infinite loops
            self.pos += 1
            return None
        if token == b"true":
            return True
        if token == b"false":
            return False
        if token == b"null":
            return None
        return self._parse_numeric(token)

    def _parse_numeric(self, token: bytes) -> Any:
        # "12 0 R" is an indirect reference; look ahead non-destructively
        try:
            if b"." in token or b"e" in token or b"E" in token:
                return float(token)
            value = int(token)
        except ValueError:
            return token.decode("latin-1")  # bare keyword (obj, endobj, ...)
        save = self.pos
        self.skip_whitespace()
        gen_tok = self.read_regular_token()
        if gen_tok.isdigit():
            self.skip_whitespace()
            if self.read_regular_token() == b"R":
                return PdfRef(value, int(gen_tok))
        self.pos = save
        return value

    def _parse_dict(self) -> dict[str, Any]:
        self.pos += 2  # '<<'
        result: dict[str, Any] = {}
        while True:
            self.skip_whitespace()
            if self.at_end():
                break
            if self.data[self.pos : self.pos + 2] == b">>":
                self.pos += 2
                break
            if self.peek() != 0x2F:
                # tolerate junk keys by skipping one object
                self.parse_object()
                continue
            key = self.read_name()
            value = self.parse_object()
            result[key.value] = value
        return result


def parse_at(data: bytes, pos: int) -> Any:
    return Lexer(data, pos).parse_object()
