"""Emoji shortname table shipped with the package."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .errors import BadCodepoint, BadName, DuplicateKey, EmptyTable

_NAME_RE = re.compile(r"[a-z0-9_]+")
_HEX_RE = re.compile(r"[0-9A-Fa-f]{1,6}")


@dataclass(frozen=True)
class EmojiTable:
    entries: Mapping[str, str]
    _pattern: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise EmptyTable("emoji table is empty")
        for key, name in self.entries.items():
            if not key:
                raise BadCodepoint("empty emoji key")
            if not _NAME_RE.fullmatch(name):
                raise BadName(f"bad emoji name {name!r}")
        # longest keys first so the alternation prefers the maximal match
        keys = sorted(self.entries, key=lambda k: (-len(k), k))
        pattern = re.compile("|".join(re.escape(k) for k in keys))
        object.__setattr__(self, "_pattern", pattern)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    @property
    def pattern(self) -> re.Pattern:
        return self._pattern


def _parse_key(hexseq: str, lineno: int) -> str:
    chars = []
    for part in hexseq.split("-"):
        if not _HEX_RE.fullmatch(part):
            raise BadCodepoint(f"line {lineno}: bad codepoint {part!r}")
        cp = int(part, 16)
        if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
            raise BadCodepoint(f"line {lineno}: codepoint {part!r} out of range")
        chars.append(chr(cp))
    return "".join(chars)


def parse_emoji_table(text: str) -> EmojiTable:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise BadCodepoint(f"line {lineno}: expected 'HEX<TAB>name'")
        key = _parse_key(parts[0].strip(), lineno)
        name = parts[1].strip()
        if not _NAME_RE.fullmatch(name):
            raise BadName(f"line {lineno}: bad emoji name {name!r}")
        if key in entries:
            raise DuplicateKey(f"line {lineno}: duplicate key {parts[0]!r}")
        entries[key] = name
    return EmojiTable(entries)


def load_emoji_table(path: Optional[str | Path] = None) -> EmojiTable:
    """Load a table file, or the shipped default when ``path`` is None."""
    if path is None:
        return default_emoji_table()
    return parse_emoji_table(Path(path).read_text(encoding="utf-8"))


_DEFAULT: Optional[EmojiTable] = None


def default_emoji_table() -> EmojiTable:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("advtext").joinpath("data/emoji.tsv").read_text("utf-8")
        _DEFAULT = parse_emoji_table(text)
    return _DEFAULT


def format_emoji_table(table: EmojiTable) -> str:
    lines = []
    for key, name in table.entries.items():
        lines.append("-".join(f"{ord(c):X}" for c in key) + "\t" + name)
    return "\n".join(lines) + "\n"
