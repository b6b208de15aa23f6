# %% [markdown]
# # Cleaning tweets
#
# Entities are unescaped, emoji become `:shortname:` tokens, the `HTTPURL`
# placeholder becomes `URL`, and whitespace is collapsed last.

# %%
from advtext.emoji_data import default_emoji_table, parse_emoji_table
from advtext.preprocess import demojize, preprocess_text, unescape_html

table = default_emoji_table()
print(len(table), "emoji in the shipped table")

raw = "Stay &amp; safe \U0001f637\n\n#COVID19 cases up in @USER county HTTPURL"
print(repr(raw))
print(repr(preprocess_text(raw, table)))

# %% [markdown]
# Unescaping is a single pass, so double-escaped text keeps one layer.

# %%
print(unescape_html("&amp;lt;3"))

# %% [markdown]
# Longest match wins for multi-codepoint emoji such as flags; a custom table
# can be built from the same `HEX<TAB>name` format.

# %%
print(repr(demojize("\U0001f1fa\U0001f1f8 vs \U0001f1ee\U0001f1f3", table)))
mini = parse_emoji_table("1F637\tmask\n1F1FA-1F1F8\tusa\n")
print(repr(preprocess_text("\U0001f1fa\U0001f1f8\U0001f637 HTTPURL", mini)))
