"""Minimal PDF text-run reader.

Extracts positioned text runs (text, baseline position, advance width, font,
size) from digitally produced PDFs: classic cross-reference tables, Flate /
ASCII85 / ASCIIHex stream filters, Type1/TrueType simple fonts with WinAnsi
or built-in encodings. This covers the common research-article toolchains;
scanned pages, encrypted files, and composite (CID) fonts are rejected or
skipped rather than guessed at.

The reader deliberately performs no layout analysis. Grouping runs into
lines, columns, and paragraphs is the extractor's job.
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass
from typing import Any

from .errors import UnsupportedDocumentError
from .fontmetrics import widths_for

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


@dataclass(frozen=True)
class Name:
    value: str


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


@dataclass
class PdfString:
    data: bytes


@dataclass
class StreamObject:
    attrs: dict
    raw: bytes


@dataclass
class TextRun:
    """One shown string in device space."""

    text: str
    page: int  # 1-based
    x: float  # pen start, device points
    y: float  # baseline
    width: float
    font: str  # base font name, subset prefix stripped
    size: float


class _Lexer:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def _skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # % comment
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                break

    def next_token(self) -> Any:
        """Next lexical token: Name, PdfString, int/float, b'<<', b'>>',
        b'[', b']', or a keyword/operator as bytes. None at end of input."""
        self._skip_ws()
        data, n = self.data, len(self.data)
        if self.pos >= n:
            return None
        c = data[self.pos]
        if c == 0x2F:  # /
            self.pos += 1
            start = self.pos
            while self.pos < n and data[self.pos] not in _WHITESPACE + _DELIMITERS:
                self.pos += 1
            raw = data[start : self.pos].decode("latin-1")
            raw = re.sub(r"#([0-9a-fA-F]{2})", lambda m: chr(int(m.group(1), 16)), raw)
            return Name(raw)
        if data.startswith(b"<<", self.pos):
            self.pos += 2
            return b"<<"
        if data.startswith(b">>", self.pos):
            self.pos += 2
            return b">>"
        if c == 0x3C:  # hex string
            end = data.find(b">", self.pos + 1)
            if end < 0:
                raise UnsupportedDocumentError("unterminated hex string")
            digits = re.sub(rb"[^0-9a-fA-F]", b"", data[self.pos + 1 : end])
            if len(digits) % 2:
                digits += b"0"
            self.pos = end + 1
            return PdfString(bytes.fromhex(digits.decode("ascii")))
        if c == 0x28:  # literal string
            return PdfString(self._literal_string())
        if c in b"[]":
            self.pos += 1
            return bytes([c])
        if c in b"+-.0123456789":
            start = self.pos
            self.pos += 1
            while self.pos < n and data[self.pos] in b"+-.0123456789eE":
                self.pos += 1
            raw = data[start : self.pos]
            try:
                return int(raw)
            except ValueError:
                try:
                    return float(raw)
                except ValueError:
                    return raw
        start = self.pos
        while self.pos < n and data[self.pos] not in _WHITESPACE + _DELIMITERS:
            self.pos += 1
        if self.pos == start:  # stray delimiter such as { or }
            self.pos += 1
        return data[start : self.pos]

    def _literal_string(self) -> bytes:
        data, n = self.data, len(self.data)
        self.pos += 1  # opening (
        out = bytearray()
        depth = 1
        while self.pos < n:
            c = data[self.pos]
            if c == 0x5C:  # backslash escape
                self.pos += 1
                if self.pos >= n:
                    break
                e = data[self.pos]
                if e in b"nrtbf":
                    out += {0x6E: b"\n", 0x72: b"\r", 0x74: b"\t", 0x62: b"\b", 0x66: b"\f"}[e]
                    self.pos += 1
                elif e in b"01234567":
                    digits = bytearray()
                    while len(digits) < 3 and self.pos < n and data[self.pos] in b"01234567":
                        digits.append(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in b"\r\n":  # escaped line break: continuation
                    self.pos += 1
                    if e == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(e)
                    self.pos += 1
            elif c == 0x28:
                depth += 1
                out.append(c)
                self.pos += 1
            elif c == 0x29:
                depth -= 1
                self.pos += 1
                if depth == 0:
                    return bytes(out)
                out.append(c)
            else:
                out.append(c)
                self.pos += 1
        raise UnsupportedDocumentError("unterminated string literal")


def _parse_value(lex: _Lexer) -> Any:
    return _parse_from_token(lex.next_token(), lex)


def _parse_from_token(tok: Any, lex: _Lexer) -> Any:
    if tok == b"<<":
        result: dict = {}
        while True:
            key = lex.next_token()
            if key == b">>" or key is None:
                return result
            value = _parse_value(lex)
            if isinstance(key, Name):
                result[key.value] = value
    if tok == b"[":
        items = []
        while True:
            t = lex.next_token()
            if t == b"]" or t is None:
                return items
            items.append(_parse_from_token(t, lex))
    if isinstance(tok, int):
        saved = lex.pos
        t2 = lex.next_token()
        t3 = lex.next_token()
        if isinstance(t2, int) and t3 == b"R":
            return Ref(tok, t2)
        lex.pos = saved
        return tok
    if tok == b"true":
        return True
    if tok == b"false":
        return False
    if tok == b"null":
        return None
    return tok


class _ObjectStore:
    """Lazy object table: offsets from the xref chain, scan fallback."""

    def __init__(self, data: bytes):
        self.data = data
        self.offsets: dict[int, int] = {}
        self.cache: dict[int, Any] = {}
        self.trailer: dict = {}
        if not self._load_xref():
            self._scan_objects()
        if not self.trailer:
            self._find_trailer()

    def _load_xref(self) -> bool:
        last = None
        for last in re.finditer(rb"startxref\s+(\d+)", self.data):
            pass
        if last is None:
            return False
        seen: set[int] = set()
        offset = int(last.group(1))
        ok = False
        while offset and offset not in seen and 0 <= offset < len(self.data):
            seen.add(offset)
            lex = _Lexer(self.data, offset)
            if lex.next_token() != b"xref":
                return False  # cross-reference stream; use the scan fallback
            offset = 0
            while True:
                first = lex.next_token()
                if first == b"trailer":
                    trailer = _parse_value(lex)
                    if isinstance(trailer, dict):
                        for k, v in trailer.items():
                            self.trailer.setdefault(k, v)  # newest section wins
                        prev = trailer.get("Prev")
                        offset = prev if isinstance(prev, int) else 0
                        ok = True
                    break
                count = lex.next_token()
                if not isinstance(first, int) or not isinstance(count, int):
                    return ok and bool(self.offsets)
                for i in range(count):
                    entry_offset = lex.next_token()
                    lex.next_token()  # generation
                    kind = lex.next_token()
                    if kind == b"n" and isinstance(entry_offset, int):
                        self.offsets.setdefault(first + i, entry_offset)
        return ok and bool(self.offsets)

    def _scan_objects(self) -> None:
        for m in re.finditer(rb"(\d+)\s+\d+\s+obj\b", self.data):
            self.offsets[int(m.group(1))] = m.start()  # last occurrence wins

    def _find_trailer(self) -> None:
        for m in re.finditer(rb"trailer\b", self.data):
            lex = _Lexer(self.data, m.end())
            value = _parse_value(lex)
            if isinstance(value, dict):
                self.trailer = value
        if not self.trailer:
            for num in list(self.offsets):
                obj = self.get(num)
                attrs = obj.attrs if isinstance(obj, StreamObject) else obj
                if isinstance(attrs, dict) and attrs.get("Type") == Name("Catalog"):
                    self.trailer = {"Root": Ref(num, 0)}
                    return

    def get(self, num: int) -> Any:
        if num in self.cache:
            return self.cache[num]
        offset = self.offsets.get(num)
        if offset is None:
            return None
        lex = _Lexer(self.data, offset)
        lex.next_token()  # object number
        lex.next_token()  # generation
        if lex.next_token() != b"obj":
            return None
        value = _parse_value(lex)
        if isinstance(value, dict):
            lex._skip_ws()
            if self.data.startswith(b"stream", lex.pos):
                value = self._read_stream(value, lex.pos + len(b"stream"))
        self.cache[num] = value
        return value

    def _read_stream(self, attrs: dict, pos: int) -> StreamObject:
        data = self.data
        if data.startswith(b"\r\n", pos):
            pos += 2
        elif data[pos : pos + 1] in (b"\n", b"\r"):
            pos += 1
        length = self.resolve(attrs.get("Length"))
        if isinstance(length, int):
            tail = pos + length
            while tail < len(data) and data[tail] in b"\r\n":
                tail += 1
            if data.startswith(b"endstream", tail):
                return StreamObject(attrs, data[pos : pos + length])
        end = data.find(b"endstream", pos)
        if end < 0:
            raise UnsupportedDocumentError("unterminated stream")
        return StreamObject(attrs, data[pos:end].rstrip(b"\r\n"))

    def resolve(self, value: Any) -> Any:
        seen = 0
        while isinstance(value, Ref):
            value = self.get(value.num)
            seen += 1
            if seen > 32:
                raise UnsupportedDocumentError("reference cycle")
        return value


def _decode_stream(obj: StreamObject, store: _ObjectStore) -> bytes:
    data = obj.raw
    filters = store.resolve(obj.attrs.get("Filter"))
    if filters is None:
        return data
    if isinstance(filters, Name):
        filters = [filters]
    for f in filters:
        name = f.value if isinstance(f, Name) else str(f)
        if name == "FlateDecode":
            data = zlib.decompress(data)
        elif name == "ASCII85Decode":
            data = base64.a85decode(data.strip().removeprefix(b"<~"), adobe=True)
        elif name == "ASCIIHexDecode":
            data = bytes.fromhex(re.sub(rb"[^0-9a-fA-F]", b"", data.rstrip(b"> \n")).decode())
        else:
            raise UnsupportedDocumentError(f"unsupported stream filter {name}")
    return data


class _Matrix:
    __slots__ = ("a", "b", "c", "d", "e", "f")

    def __init__(self, a=1.0, b=0.0, c=0.0, d=1.0, e=0.0, f=0.0):
        self.a, self.b, self.c, self.d, self.e, self.f = a, b, c, d, e, f

    def mul(self, o: "_Matrix") -> "_Matrix":
        return _Matrix(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
            self.e * o.a + self.f * o.c + o.e,
            self.e * o.b + self.f * o.d + o.f,
        )

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.c * y + self.e, self.b * x + self.d * y + self.f)

    def scale(self) -> float:
        return (abs(self.a * self.d - self.b * self.c)) ** 0.5 or 1.0


class _Font:
    def __init__(self, attrs: dict, store: _ObjectStore):
        base = store.resolve(attrs.get("BaseFont"))
        self.base_font = (base.value if isinstance(base, Name) else "unknown").split("+", 1)[-1]
        subtype = store.resolve(attrs.get("Subtype"))
        self.composite = subtype == Name("Type0")
        widths = store.resolve(attrs.get("Widths"))
        first = store.resolve(attrs.get("FirstChar"))
        table = widths_for(self.base_font)
        if isinstance(widths, list):
            table = list(table or [500] * 256)
            start = first if isinstance(first, int) else 0
            for i, w in enumerate(widths):
                value = store.resolve(w)
                if 0 <= start + i < 256 and isinstance(value, (int, float)):
                    table[start + i] = value
        self.widths = table or [500] * 256

    def decode(self, raw: bytes) -> str:
        # WinAnsi and the Type1 built-ins agree with cp1252 over the range
        # research text uses; /Differences arrays are not interpreted.
        return raw.decode("cp1252", errors="replace")

    def width(self, code: int) -> float:
        return self.widths[code] if 0 <= code < len(self.widths) else 500.0


def _page_fonts(resources: Any, store: _ObjectStore) -> dict[str, _Font]:
    fonts: dict[str, _Font] = {}
    resources = store.resolve(resources) or {}
    if not isinstance(resources, dict):
        return fonts
    font_dict = store.resolve(resources.get("Font")) or {}
    if isinstance(font_dict, dict):
        for key, ref in font_dict.items():
            attrs = store.resolve(ref)
            if isinstance(attrs, StreamObject):
                attrs = attrs.attrs
            if isinstance(attrs, dict):
                fonts[key] = _Font(attrs, store)
    return fonts


def _collect_pages(store: _ObjectStore) -> list[dict]:
    root = store.resolve(store.trailer.get("Root"))
    if isinstance(root, StreamObject):
        root = root.attrs
    if not isinstance(root, dict):
        raise UnsupportedDocumentError("no document catalog")
    pages: list[dict] = []

    def walk(node: Any, inherited: dict, depth: int) -> None:
        if depth > 64:
            return
        node = store.resolve(node)
        if isinstance(node, StreamObject):
            node = node.attrs
        if not isinstance(node, dict):
            return
        merged = dict(inherited)
        for key in ("Resources", "MediaBox"):
            if key in node:
                merged[key] = node[key]
        if store.resolve(node.get("Type")) == Name("Page"):
            page = dict(node)
            page.update(merged)
            pages.append(page)
        else:
            kids = store.resolve(node.get("Kids"))
            for kid in kids if isinstance(kids, list) else []:
                walk(kid, merged, depth + 1)

    walk(root.get("Pages"), {}, 0)
    return pages


def _page_content(page: dict, store: _ObjectStore) -> bytes:
    contents = store.resolve(page.get("Contents"))
    if contents is None:
        return b""
    if not isinstance(contents, list):
        contents = [contents]
    parts = []
    for item in contents:
        obj = store.resolve(item)
        if isinstance(obj, StreamObject):
            parts.append(_decode_stream(obj, store))
    return b"\n".join(parts)


def _interpret(content: bytes, fonts: dict[str, _Font], page_num: int) -> list[TextRun]:
    lex = _Lexer(content)
    runs: list[TextRun] = []
    ctm = _Matrix()
    stack: list[tuple] = []
    font: _Font | None = None
    size = 0.0
    char_spacing = 0.0
    word_spacing = 0.0
    leading = 0.0
    hscale = 1.0
    tm = _Matrix()
    tlm = _Matrix()
    operands: list[Any] = []

    def show(s: PdfString) -> None:
        nonlocal tm
        if font is None or not s.data or font.composite:
            return
        advance = 0.0
        for code in s.data:
            w = font.width(code) / 1000.0 * size
            advance += (w + char_spacing + (word_spacing if code == 32 else 0.0)) * hscale
        device = tm.mul(ctm)
        x, y = device.apply(0.0, 0.0)
        dscale = device.scale()
        runs.append(
            TextRun(
                text=font.decode(s.data),
                page=page_num,
                x=x,
                y=y,
                width=advance * dscale,
                font=font.base_font,
                size=size * dscale,
            )
        )
        tm = _Matrix(1, 0, 0, 1, advance, 0).mul(tm)

    def next_line(tx: float, ty: float) -> None:
        nonlocal tm, tlm
        tlm = _Matrix(1, 0, 0, 1, tx, ty).mul(tlm)
        tm = _Matrix(tlm.a, tlm.b, tlm.c, tlm.d, tlm.e, tlm.f)

    while True:
        tok = lex.next_token()
        if tok is None:
            break
        if isinstance(tok, (int, float, Name, PdfString)):
            operands.append(tok)
            continue
        if tok == b"[":
            items: list[Any] = []
            while True:
                t = lex.next_token()
                if t == b"]" or t is None:
                    break
                items.append(t)
            operands.append(items)
            continue
        if tok == b"<<":
            operands.append(_parse_from_token(tok, lex))
            continue

        op = tok
        try:
            if op == b"q":
                stack.append((ctm, font, size, char_spacing, word_spacing, leading, hscale))
            elif op == b"Q":
                if stack:
                    ctm, font, size, char_spacing, word_spacing, leading, hscale = stack.pop()
            elif op == b"cm" and len(operands) >= 6:
                a, b, c, d, e, f = (float(v) for v in operands[-6:])
                ctm = _Matrix(a, b, c, d, e, f).mul(ctm)
            elif op == b"BT":
                tm = _Matrix()
                tlm = _Matrix()
            elif op == b"Tf" and len(operands) >= 2 and isinstance(operands[-2], Name):
                font = fonts.get(operands[-2].value)
                size = float(operands[-1])
            elif op == b"Td" and len(operands) >= 2:
                next_line(float(operands[-2]), float(operands[-1]))
            elif op == b"TD" and len(operands) >= 2:
                leading = -float(operands[-1])
                next_line(float(operands[-2]), float(operands[-1]))
            elif op == b"Tm" and len(operands) >= 6:
                a, b, c, d, e, f = (float(v) for v in operands[-6:])
                tm = _Matrix(a, b, c, d, e, f)
                tlm = _Matrix(a, b, c, d, e, f)
            elif op == b"T*":
                next_line(0.0, -leading)
            elif op == b"TL" and operands:
                leading = float(operands[-1])
            elif op == b"Tc" and operands:
                char_spacing = float(operands[-1])
            elif op == b"Tw" and operands:
                word_spacing = float(operands[-1])
            elif op == b"Tz" and operands:
                hscale = float(operands[-1]) / 100.0
            elif op == b"Tj" and operands and isinstance(operands[-1], PdfString):
                show(operands[-1])
            elif op == b"'" and operands and isinstance(operands[-1], PdfString):
                next_line(0.0, -leading)
                show(operands[-1])
            elif op == b'"' and len(operands) >= 3 and isinstance(operands[-1], PdfString):
                word_spacing = float(operands[-3])
                char_spacing = float(operands[-2])
                next_line(0.0, -leading)
                show(operands[-1])
            elif op == b"TJ" and operands and isinstance(operands[-1], list):
                for item in operands[-1]:
                    if isinstance(item, PdfString):
                        show(item)
                    elif isinstance(item, (int, float)):
                        tm = _Matrix(1, 0, 0, 1, -item / 1000.0 * size * hscale, 0).mul(tm)
        except (TypeError, ValueError):
            pass  # malformed operands: skip the operator
        operands = []
    return runs


def read_text_runs(pdf_bytes: bytes) -> tuple[list[TextRun], int]:
    """Parse a PDF and return (text runs, page count).

    Raises UnsupportedDocumentError for encrypted files, files without a
    parseable page tree, and files with no extractable text (scans).
    """
    if not pdf_bytes.lstrip()[:8].startswith(b"%PDF-"):
        raise UnsupportedDocumentError("not a PDF file")
    store = _ObjectStore(pdf_bytes)
    if store.trailer.get("Encrypt") is not None:
        raise UnsupportedDocumentError("encrypted PDF")
    pages = _collect_pages(store)
    if not pages:
        raise UnsupportedDocumentError("no pages found")
    runs: list[TextRun] = []
    for page_num, page in enumerate(pages, start=1):
        fonts = _page_fonts(page.get("Resources"), store)
        content = _page_content(page, store)
        runs.extend(_interpret(content, fonts, page_num))
    if not any(run.text.strip() for run in runs):
        raise UnsupportedDocumentError("no extractable text layer")
    return runs, len(pages)
