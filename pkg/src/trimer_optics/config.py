"""Key-value configuration text.

Format::

    # comment
    [section]
    key = value   # trailing comment

Keys before the first section header belong to the unnamed section ``None``.
Numbers are parsed with :func:`float`, which is correctly rounded, so decimal
text written with :func:`repr` round-trips bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MissingParameter, ParseError


@dataclass(frozen=True)
class Entry:
    value: str
    line: int


def parse_blocks(text: str) -> dict[str | None, dict[str, Entry]]:
    blocks: dict[str | None, dict[str, Entry]] = {None: {}}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ParseError(f"malformed section header {raw.strip()!r}", line=lineno)
            current = line[1:-1].strip()
            if current in blocks:
                raise ParseError(f"duplicate section [{current}]", line=lineno)
            blocks[current] = {}
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParseError("empty key or value", line=lineno, key=key or None)
        if key in blocks[current]:
            raise ParseError("duplicate key", line=lineno, key=key)
        blocks[current][key] = Entry(value, lineno)
    return blocks


def take_float(block: dict[str, Entry], key: str, form: str | None = None,
               default: float | None = None) -> float:
    if key not in block:
        if default is not None:
            return default
        raise MissingParameter(key, form)
    entry = block[key]
    try:
        return float(entry.value)
    except ValueError:
        raise ParseError(f"not a number: {entry.value!r}", line=entry.line, key=key) from None


def take_int(block: dict[str, Entry], key: str, default: int | None = None) -> int:
    if key not in block:
        if default is not None:
            return default
        raise MissingParameter(key)
    entry = block[key]
    try:
        return int(entry.value)
    except ValueError:
        raise ParseError(f"not an integer: {entry.value!r}", line=entry.line, key=key) from None


def take_str(block: dict[str, Entry], key: str, default: str | None = None) -> str:
    if key not in block:
        if default is not None:
            return default
        raise MissingParameter(key)
    return block[key].value


def reject_unknown(block: dict[str, Entry], allowed, section: str | None = None) -> None:
    for key, entry in block.items():
        if key not in allowed:
            where = f" in [{section}]" if section else ""
            raise ParseError(f"unknown key{where}", line=entry.line, key=key)


def format_float(x: float) -> str:
    return repr(float(x))
