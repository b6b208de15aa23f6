"""Tweet text normalization: entities, whitespace, URL placeholders, emoji."""
from __future__ import annotations

import re
from typing import Optional

from .emoji_data import EmojiTable, default_emoji_table

_ENTITY_RE = re.compile(r"&(amp|lt|gt|quot|#[0-9]+|#[xX][0-9a-fA-F]+);")
_NAMED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"'}
_WS_RE = re.compile(r"[ \t\r\n]+")
_TOKEN_SPLIT_RE = re.compile(r"([ \t\r\n]+)")


def _entity(m: re.Match) -> str:
    body = m.group(1)
    if body in _NAMED:
        return _NAMED[body]
    cp = int(body[2:], 16) if body[1] in "xX" else int(body[1:])
    if cp == 0 or cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
        return m.group(0)
    return chr(cp)


def unescape_html(text: str) -> str:
    """Replace &amp; &lt; &gt; &quot; and numeric references, in one pass."""
    return _ENTITY_RE.sub(_entity, text)


def normalize_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip(" ")


def replace_url_token(text: str) -> str:
    parts = _TOKEN_SPLIT_RE.split(text)
    return "".join("URL" if p == "HTTPURL" else p for p in parts)


def demojize(text: str, table: Optional[EmojiTable] = None) -> str:
    table = table or default_emoji_table()
    return table.pattern.sub(lambda m: f" :{table.entries[m.group(0)]}: ", text)


def preprocess_text(text: str, table: Optional[EmojiTable] = None) -> str:
    """Full normalization chain for one tweet.

    Order: entities, emoji, URL placeholder, whitespace. The URL step runs
    after demojization so an emoji glued to ``HTTPURL`` cannot leave a bare
    placeholder behind, and whitespace goes last to collapse emoji padding.
    """
    text = unescape_html(text)
    text = demojize(text, table)
    text = replace_url_token(text)
    return normalize_whitespace(text)


def preprocess_dataset(data, table: Optional[EmojiTable] = None):
    table = table or default_emoji_table()
    return data.map_text(lambda s: preprocess_text(s, table))
