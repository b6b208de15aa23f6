import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advtext import preprocess
from advtext.emoji_data import EmojiTable, default_emoji_table

from golden import GOLDEN, MASK, UNKNOWN

TABLE = default_emoji_table()


@pytest.mark.parametrize("step,raw,expected", GOLDEN)
def test_golden(step, raw, expected):
    fn = getattr(preprocess, step)
    out = fn(raw, TABLE) if step in ("demojize", "preprocess_text") else fn(raw)
    assert out == expected
    assert out.encode("utf-8") == expected.encode("utf-8")


@pytest.mark.parametrize("raw", [g[2] for g in GOLDEN if g[0] == "preprocess_text"])
def test_preprocess_idempotent_on_golden_outputs(raw):
    assert preprocess.preprocess_text(raw, TABLE) == raw


def test_custom_table_longest_match():
    table = EmojiTable({"\U0001f44d": "thumbs_up", "\U0001f44d\U0001f3fd": "thumbs_up_medium"})
    assert preprocess.demojize("\U0001f44d\U0001f3fd\U0001f44d", table) == " :thumbs_up_medium:  :thumbs_up: "


def test_unknown_emoji_passes_through():
    assert UNKNOWN not in TABLE
    assert preprocess.preprocess_text("wow " + UNKNOWN, TABLE) == "wow " + UNKNOWN


# entities are excluded: single-pass unescaping is deliberately not idempotent
_alphabet = st.sampled_from(
    list("abcXYZ019 .,:_@#<>\"'\t\r\n") + ["HTTPURL", " HTTPURL ", MASK, "\U0001f602", "❤", "️", "\U0001f1fa", "\U0001f1f8", "&amp;", "&#39;", UNKNOWN]
)


@settings(max_examples=300, deadline=None)
@given(st.lists(_alphabet, max_size=25).map("".join))
def test_output_properties(raw):
    out = preprocess.preprocess_text(raw, TABLE)
    assert "\t" not in out and "\n" not in out and "\r" not in out
    assert "  " not in out
    assert out == out.strip(" ")
    assert "HTTPURL" not in out.split(" ")
    if "&" not in out:
        assert preprocess.preprocess_text(out, TABLE) == out


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_idempotent_without_entities(raw):
    out = preprocess.preprocess_text(raw.replace("&", ""), TABLE)
    assert preprocess.preprocess_text(out, TABLE) == out


def test_single_pass_breaks_idempotence_on_double_escapes():
    once = preprocess.preprocess_text("&amp;lt;", TABLE)
    assert once == "&lt;"
    assert preprocess.preprocess_text(once, TABLE) == "<"


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_demojized_names_are_colon_tokens(raw):
    out = preprocess.demojize(raw.replace(":", ""), TABLE)
    import re

    for name in re.findall(r":([^:\s]*):", out):
        assert re.fullmatch(r"[a-z0-9_]+", name)
