"""Strict, order-preserving parser/emitter for the manifest document format.

The format is the indentation-based subset of YAML used by manifests and
config files: block mappings, block sequences, flow sequences (``[a, b]``)
and scalars. It is deliberately stricter than YAML:

* mapping key order is preserved and duplicate keys are errors;
* anchors, aliases, tags, flow mappings, block scalars, directives and
  multi-document streams are rejected;
* indentation uses spaces only;
* scalars keep their verbatim text — the *reader* decides whether a value
  is a string, number or boolean, so ``1.10`` never silently becomes the
  float ``1.1`` and an env var value of ``on`` stays the string ``on``.

Errors carry 1-based line and column positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class DocumentError(ValueError):
    """Syntax error in a manifest-format document."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


@dataclass
class Scalar:
    raw: str
    line: int = 0
    column: int = 0
    quoted: bool = False

    def as_str(self) -> str:
        return self.raw

    def as_auto(self) -> str | int | float | bool | None:
        """Scalar with inferred type: int, float, bool, null, else string."""
        if self.quoted:
            return self.raw
        text = self.raw
        if text in ("null", "~", ""):
            return None
        if text == "true":
            return True
        if text == "false":
            return False
        if re.fullmatch(r"[+-]?\d+", text):
            return int(text)
        if re.fullmatch(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?", text) and (
            "." in text or "e" in text or "E" in text
        ):
            return float(text)
        return self.raw

    def as_float(self) -> float:
        try:
            return float(self.raw)
        except ValueError:
            raise DocumentError(f"expected a number, got {self.raw!r}", self.line, self.column)

    def as_int(self) -> int:
        try:
            return int(self.raw)
        except ValueError:
            raise DocumentError(f"expected an integer, got {self.raw!r}", self.line, self.column)

    def as_bool(self) -> bool:
        if self.raw == "true":
            return True
        if self.raw == "false":
            return False
        raise DocumentError(f"expected true/false, got {self.raw!r}", self.line, self.column)


@dataclass
class Seq:
    items: list["Node"] = field(default_factory=list)
    line: int = 0
    column: int = 0


@dataclass
class Map:
    entries: list[tuple[str, "Node"]] = field(default_factory=list)
    line: int = 0
    column: int = 0

    def keys(self) -> list[str]:
        return [k for k, _ in self.entries]

    def get(self, key: str) -> "Node | None":
        for k, node in self.entries:
            if k == key:
                return node
        return None

    def has(self, key: str) -> bool:
        return self.get(key) is not None


Node = Scalar | Seq | Map


@dataclass
class _Line:
    indent: int
    content: str
    number: int


_FORBIDDEN_LEAD = {
    "&": "anchors are not supported",
    "*": "aliases are not supported",
    "!": "tags are not supported",
    "{": "flow mappings are not supported",
    "|": "block scalars are not supported",
    ">": "block scalars are not supported",
}


def _strip_comment(text: str, line_no: int) -> str:
    """Remove a trailing comment, honoring quoted spans.

    A quote only opens a span at the start of a value position (line start
    or after one of ``: ``, ``- ``, ``[``, ``, ``), so apostrophes inside
    plain scalars are left alone.
    """
    quote: str | None = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if quote == '"' and ch == "\\":
                i += 2
                continue
            if ch == quote:
                if quote == "'" and i + 1 < len(text) and text[i + 1] == "'":
                    i += 2
                    continue
                quote = None
        elif ch in "'\"" and (i == 0 or text[i - 1] in " [,"):
            quote = ch
        elif ch == "#" and (i == 0 or text[i - 1] in " \t"):
            return text[:i].rstrip()
        i += 1
    if quote:
        raise DocumentError("unterminated quoted string", line_no, len(text))
    return text.rstrip()


def _split_lines(text: str) -> list[_Line]:
    lines: list[_Line] = []
    for number, rawline in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        if "\t" in rawline[: len(rawline) - len(rawline.lstrip(" \t"))]:
            raise DocumentError("tabs are not allowed in indentation", number, 1)
        stripped_lead = rawline.lstrip(" ")
        content = _strip_comment(stripped_lead, number)
        if not content:
            continue
        if content.startswith("---") or content.startswith("%"):
            raise DocumentError("directives and multi-document streams are not supported", number, 1)
        lines.append(_Line(len(rawline) - len(stripped_lead), content, number))
    return lines


def _unquote(text: str, line: int, col: int) -> str:
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise DocumentError("unterminated double-quoted string", line, col)
        body = text[1:-1]
        return re.sub(
            r"\\(.)",
            lambda m: {"n": "\n", "t": "\t", '"': '"', "\\": "\\"} .get(m.group(1), m.group(1)),
            body,
        )
    if text.startswith("'"):
        if not text.endswith("'") or len(text) < 2:
            raise DocumentError("unterminated single-quoted string", line, col)
        return text[1:-1].replace("''", "'")
    return text


def _parse_flow_seq(text: str, line: int, col: int) -> Seq:
    seq = Seq(line=line, column=col)
    i = 1  # past '['

    def skip_ws(j: int) -> int:
        while j < len(text) and text[j] == " ":
            j += 1
        return j

    i = skip_ws(i)
    if i < len(text) and text[i] == "]":
        if text[i + 1 :].strip():
            raise DocumentError("trailing content after flow sequence", line, col + i + 1)
        return seq
    while True:
        i = skip_ws(i)
        if i >= len(text):
            raise DocumentError("unterminated flow sequence", line, col)
        if text[i] == "[":
            # nested flow sequence: find its matching bracket
            depth = 0
            j = i
            while j < len(text):
                if text[j] == "[":
                    depth += 1
                elif text[j] == "]":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if depth != 0:
                raise DocumentError("unterminated flow sequence", line, col + i)
            seq.items.append(_parse_flow_seq(text[i : j + 1], line, col + i))
            i = j + 1
        else:
            j = i
            quote = text[j] if text[j] in "'\"" else None
            if quote:
                j += 1
                while j < len(text):
                    if quote == '"' and text[j] == "\\":
                        j += 2
                        continue
                    if text[j] == quote:
                        j += 1
                        break
                    j += 1
            while j < len(text) and text[j] not in ",]":
                j += 1
            raw = text[i:j].strip()
            if any(raw.startswith(c) for c in _FORBIDDEN_LEAD):
                raise DocumentError(_FORBIDDEN_LEAD[raw[0]], line, col + i)
            seq.items.append(
                Scalar(_unquote(raw, line, col + i), line, col + i, quoted=raw[:1] in "'\"")
            )
            i = j
        i = skip_ws(i)
        if i >= len(text):
            raise DocumentError("unterminated flow sequence", line, col)
        if text[i] == ",":
            i += 1
            continue
        if text[i] == "]":
            if text[i + 1 :].strip():
                raise DocumentError("trailing content after flow sequence", line, col + i + 1)
            return seq
        raise DocumentError(f"unexpected character {text[i]!r} in flow sequence", line, col + i)


def _parse_inline_value(text: str, line: int, col: int) -> Node:
    if text.startswith("["):
        return _parse_flow_seq(text, line, col)
    for lead, message in _FORBIDDEN_LEAD.items():
        if text.startswith(lead):
            raise DocumentError(message, line, col)
    return Scalar(_unquote(text, line, col), line, col, quoted=text[:1] in "'\"")


def _split_key_value(content: str, line: int, col: int) -> tuple[str, str] | None:
    """Split ``key: value`` / ``key:``; None when the line is not a mapping entry."""
    quote: str | None = None
    i = 0
    while i < len(content):
        ch = content[i]
        if quote:
            if quote == '"' and ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "'\"" and i == 0:
            quote = ch
        elif ch == ":" and (i + 1 == len(content) or content[i + 1] == " "):
            key = _unquote(content[:i].strip(), line, col)
            if not key:
                raise DocumentError("empty mapping key", line, col)
            return key, content[i + 1 :].strip()
        i += 1
    return None


class _Parser:
    def __init__(self, lines: list[_Line]) -> None:
        self.lines = lines
        self.pos = 0

    def peek(self) -> _Line | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def parse_block(self, indent: int) -> Node:
        line = self.peek()
        assert line is not None
        if line.content == "-" or line.content.startswith("- "):
            return self.parse_sequence(indent)
        return self.parse_mapping(indent)

    def parse_mapping(self, indent: int) -> Map:
        first = self.peek()
        assert first is not None
        result = Map(line=first.number, column=indent + 1)
        seen: set[str] = set()
        while True:
            line = self.peek()
            if line is None or line.indent < indent:
                break
            if line.indent > indent:
                raise DocumentError("unexpected indentation", line.number, line.indent + 1)
            if line.content == "-" or line.content.startswith("- "):
                raise DocumentError("sequence item in mapping context", line.number, line.indent + 1)
            kv = _split_key_value(line.content, line.number, line.indent + 1)
            if kv is None:
                raise DocumentError(
                    f"expected 'key: value', got {line.content!r}", line.number, line.indent + 1
                )
            key, value_text = kv
            if key in seen:
                raise DocumentError(f"duplicate key {key!r}", line.number, line.indent + 1)
            seen.add(key)
            self.pos += 1
            if value_text:
                value_col = line.indent + len(line.content) - len(value_text) + 1
                node: Node = _parse_inline_value(value_text, line.number, value_col)
            else:
                nxt = self.peek()
                if nxt is not None and nxt.indent > indent:
                    node = self.parse_block(nxt.indent)
                else:
                    node = Scalar("", line.number, line.indent + 1)
            result.entries.append((key, node))
        return result

    def parse_sequence(self, indent: int) -> Seq:
        first = self.peek()
        assert first is not None
        result = Seq(line=first.number, column=indent + 1)
        while True:
            line = self.peek()
            if line is None or line.indent != indent:
                if line is not None and line.indent > indent:
                    raise DocumentError("unexpected indentation", line.number, line.indent + 1)
                break
            if not (line.content == "-" or line.content.startswith("- ")):
                break
            item_text = line.content[1:].strip()
            item_col = indent + (len(line.content) - len(item_text)) + 1
            if not item_text:
                self.pos += 1
                nxt = self.peek()
                if nxt is not None and nxt.indent > indent:
                    result.items.append(self.parse_block(nxt.indent))
                else:
                    result.items.append(Scalar("", line.number, item_col))
                continue
            kv = _split_key_value(item_text, line.number, item_col)
            if kv is None:
                self.pos += 1
                result.items.append(_parse_inline_value(item_text, line.number, item_col))
                continue
            # Compact mapping: "- key: value" with continuation keys aligned
            # to the first key's column.
            item_indent = item_col - 1
            self.lines[self.pos] = _Line(item_indent, item_text, line.number)
            result.items.append(self.parse_mapping(item_indent))
        return result


def load(text: str) -> Node:
    """Parse a document; the top level must be a mapping or sequence."""
    lines = _split_lines(text)
    if not lines:
        raise DocumentError("empty document", 1, 1)
    parser = _Parser(lines)
    node = parser.parse_block(lines[0].indent)
    leftover = parser.peek()
    if leftover is not None:
        raise DocumentError(
            f"unexpected content {leftover.content!r}", leftover.number, leftover.indent + 1
        )
    return node


# ---------------------------------------------------------------------------
# Emission


class FlowList(list):
    """A list that serializes in flow style: ``[a, b, c]``."""


_PLAIN_SAFE_RE = re.compile(r"^[^\s\-?:,\[\]{}#&*!|>'\"%@`][^#]*$")
_NUMBERLIKE_RE = re.compile(r"^([+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?|true|false|null|~)$")


def _format_scalar(value: object) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if not text:
        return '""'
    needs_quote = (
        not _PLAIN_SAFE_RE.match(text)
        or _NUMBERLIKE_RE.match(text)
        or ": " in text
        or text != text.strip()
        or "\n" in text
    )
    if needs_quote:
        escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    return text


def _emit(value: object, indent: int, out: list[str]) -> None:
    pad = " " * indent
    if isinstance(value, dict):
        for key, child in value.items():
            key_text = _format_scalar(key) if not isinstance(key, str) else key
            if isinstance(child, FlowList) or not isinstance(child, (dict, list)):
                out.append(f"{pad}{key_text}: {_format_scalar_or_flow(child)}")
            elif not child:  # empty dict/list
                out.append(f"{pad}{key_text}: {'{}' if isinstance(child, dict) else '[]'}")
            else:
                out.append(f"{pad}{key_text}:")
                _emit(child, indent + 2, out)
        return
    if isinstance(value, list):
        for item in value:
            if isinstance(item, dict) and item:
                first = True
                sub: list[str] = []
                _emit(item, indent + 2, sub)
                for line in sub:
                    if first:
                        out.append(pad + "-" + line[indent + 1 :])
                        first = False
                    else:
                        out.append(line)
            elif isinstance(item, FlowList) or not isinstance(item, (dict, list)):
                out.append(f"{pad}- {_format_scalar_or_flow(item)}")
            else:
                out.append(f"{pad}-")
                _emit(item, indent + 2, out)
        return
    out.append(f"{pad}{_format_scalar_or_flow(value)}")


def _format_scalar_or_flow(value: object) -> str:
    if isinstance(value, FlowList):
        return "[" + ", ".join(_format_scalar_or_flow(v) for v in value) + "]"
    return _format_scalar(value)


def dump(value: dict | list) -> str:
    """Serialize nested dicts/lists/scalars; dict order is emission order."""
    out: list[str] = []
    _emit(value, 0, out)
    return "\n".join(out) + "\n"
