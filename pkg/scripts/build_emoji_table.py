"""Regenerate src/advtext/data/emoji.tsv from the ``emoji`` package.

Developer tool only; the library reads the shipped TSV and never imports ``emoji``.

    pip install emoji
    python scripts/build_emoji_table.py > src/advtext/data/emoji.tsv
"""
import re
import sys
import unicodedata

import emoji

SKIN_TONES = {chr(c) for c in range(0x1F3FB, 0x1F400)}


def shortname(raw):
    name = raw.strip(":").replace("#", "hash").replace("*", "asterisk")
    name = unicodedata.normalize("NFKD", name)
    name = name.encode("ascii", "ignore").decode().lower()
    name = re.sub(r"[^a-z0-9_]+", "_", name)
    return re.sub(r"_+", "_", name).strip("_")


def main(out=sys.stdout):
    rows = {}
    for char, info in emoji.EMOJI_DATA.items():
        # skin-toned variants are left to the standalone modifier entries
        if len(char) > 1 and SKIN_TONES & set(char):
            continue
        name = shortname(info["en"])
        if name:
            rows[char] = name
    for char in sorted(rows, key=lambda c: [ord(x) for x in c]):
        key = "-".join(f"{ord(x):X}" for x in char)
        out.write(f"{key}\t{rows[char]}\n")


if __name__ == "__main__":
    main()
