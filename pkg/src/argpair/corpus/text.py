"""Tokenization and sentence splitting."""
from __future__ import annotations

import html
import re

_TOKEN = re.compile(r"\w+(?:'\w+)*|[^\w\s]")
_BOUNDARY = re.compile(r"[.!?]+(?=\s|$)")

ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "eg", "ie",
    "u.s", "u.k", "approx", "inc", "ltd", "co", "no", "vol", "fig", "gov", "sen", "rep",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
})

QUOTE_MARKER = ">"


def normalize_markup(text: str) -> str:
    return html.unescape(text)


def tokenize(text: str) -> list[str]:
    """Lowercase; words (with inner apostrophes) and single punctuation marks."""
    return _TOKEN.findall(normalize_markup(text).lower())


def normalize(text: str) -> str:
    return " ".join(tokenize(text))


def _is_abbreviation(chunk: str) -> bool:
    word = chunk.rsplit(None, 1)[-1] if chunk.strip() else ""
    word = word.lstrip("([\"'").lower()
    if not word:
        return False
    if len(word) == 1 and word.isalpha():
        return True  # initials such as "J."
    return word in ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split on runs of ``.``, ``!``, ``?`` followed by whitespace or end of line.

    Each non-empty line is split separately, and a period after a known
    abbreviation or a single-letter initial does not end a sentence.
    """
    out: list[str] = []
    for line in normalize_markup(text).splitlines():
        line = " ".join(line.split())
        if not line:
            continue
        start = 0
        for m in _BOUNDARY.finditer(line):
            if m.group() == "." and _is_abbreviation(line[start:m.start()]):
                continue
            piece = line[start:m.end()].strip()
            if piece:
                out.append(piece)
            start = m.end()
        tail = line[start:].strip()
        if tail:
            out.append(tail)
    return out


def split_quote_blocks(post: str) -> list[tuple[bool, str]]:
    """Group a reply post's lines into alternating (is_quote, text) segments.

    A quote line starts with ``>`` (``&gt;`` in raw markup); consecutive quote
    lines form one block with the markers stripped.
    """
    segments: list[tuple[bool, list[str]]] = []
    for raw in normalize_markup(post).splitlines():
        line = raw.strip()
        if not line:
            continue
        is_quote = line.startswith(QUOTE_MARKER)
        if is_quote:
            line = line.lstrip(QUOTE_MARKER).strip()
            if not line:
                continue
        if segments and segments[-1][0] == is_quote:
            segments[-1][1].append(line)
        else:
            segments.append((is_quote, [line]))
    return [(q, "\n".join(lines) if not q else " ".join(lines)) for q, lines in segments]
