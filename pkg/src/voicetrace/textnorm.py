"""Transcript normalization for German TTS corpora.

Lowercases, expands integer tokens to German cardinal words, applies a
whole-word replacement lexicon (abbreviations, anglicism respellings), strips
everything outside the corpus charset, and collapses whitespace. The result is
stable under repeated application.
"""

from __future__ import annotations

import csv
import logging
import re

from .errors import NumberOutOfRange

logger = logging.getLogger(__name__)

# Lowercase German prose plus the punctuation we keep. '|' and newline are
# deliberately excluded so transcripts are always manifest-safe.
DEFAULT_CHARSET = frozenset("abcdefghijklmnopqrstuvwxyzäöüß .,!?;:-'")

MAX_CARDINAL = 999_999

_UNITS = [
    "null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben",
    "acht", "neun", "zehn", "elf", "zwölf",
]
_TEENS = {
    13: "dreizehn", 14: "vierzehn", 15: "fünfzehn", 16: "sechzehn",
    17: "siebzehn", 18: "achtzehn", 19: "neunzehn",
}
_TENS = {
    20: "zwanzig", 30: "dreißig", 40: "vierzig", 50: "fünfzig",
    60: "sechzig", 70: "siebzig", 80: "achtzig", 90: "neunzig",
}

# Consumes whole decimal/grouped runs ("3,5", "1.000.000") but not "3." ordinals.
_DECIMAL_RE = re.compile(r"\d+[.,][\d.,]*\d")
_INTEGER_RE = re.compile(r"\d+")
_WHITESPACE_RE = re.compile(r"\s+")


def _under_100(n: int) -> str:
    if n < 13:
        return _UNITS[n]
    if n < 20:
        return _TEENS[n]
    tens, unit = divmod(n, 10)
    if unit == 0:
        return _TENS[tens * 10]
    prefix = "ein" if unit == 1 else _UNITS[unit]
    return f"{prefix}und{_TENS[tens * 10]}"


def _under_1000(n: int) -> str:
    hundreds, rest = divmod(n, 100)
    parts = []
    if hundreds:
        parts.append(("ein" if hundreds == 1 else _UNITS[hundreds]) + "hundert")
    if rest:
        parts.append(_under_100(rest))
    return "".join(parts)


def german_cardinal(n: int) -> str:
    """Spell out an integer in 0..999999 as a German cardinal word."""
    if not 0 <= n <= MAX_CARDINAL:
        raise NumberOutOfRange(f"cannot expand {n}: supported range is 0..{MAX_CARDINAL}")
    if n == 0:
        return "null"
    thousands, rest = divmod(n, 1000)
    parts = []
    if thousands:
        prefix = _under_1000(thousands)
        if prefix.endswith("eins"):  # "einhunderteins" -> "einhundertein(tausend)"
            prefix = prefix[:-1]
        parts.append(prefix + "tausend")
    if rest:
        parts.append(_under_1000(rest))
    return "".join(parts)


def _whole_word(key: str) -> re.Pattern:
    # \b fails around keys that end in punctuation ("z.B."), so use lookarounds.
    return re.compile(rf"(?<!\w){re.escape(key)}(?!\w)", re.IGNORECASE)


def normalize_text(text: str, replacement_lexicon: dict[str, str] | None = None,
                   charset: frozenset[str] = DEFAULT_CHARSET) -> str:
    """Normalize a raw transcript to lowercase charset-clean text.

    Lexicon entries are replaced whole-word and case-insensitively before
    lowercasing. Integer tokens become German cardinals; decimal numbers are
    dropped with a warning. Raises NumberOutOfRange for integers beyond the
    expansion range.
    """
    for key, value in (replacement_lexicon or {}).items():
        text = _whole_word(key).sub(value, text)
    text = text.lower()

    dropped = _DECIMAL_RE.findall(text)
    if dropped:
        logger.warning("dropping non-cardinal number tokens: %s", ", ".join(dropped))
        text = _DECIMAL_RE.sub(" ", text)
    text = _INTEGER_RE.sub(lambda m: german_cardinal(int(m.group(0))), text)

    text = "".join(ch for ch in text if ch in charset)
    return _WHITESPACE_RE.sub(" ", text).strip()


def load_lexicon_csv(path) -> dict[str, str]:
    """Read a replacement lexicon from a CSV file with header ``from,to``."""
    lexicon: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            lexicon[row["from"]] = row["to"]
    return lexicon
