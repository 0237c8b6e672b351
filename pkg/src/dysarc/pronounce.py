"""Text to phoneme sequences through a CMUdict-format pronouncing dictionary."""

from __future__ import annotations

import difflib
import re
from importlib import resources
from pathlib import Path

from .errors import InputError

_WORD_RE = re.compile(r"[a-z']+")
_STRESS_RE = re.compile(r"\d+$")
_VARIANT_RE = re.compile(r"\(\d+\)$")


class PronouncingDictionary:
    """Word -> phoneme lookup. Stress digits are stripped, variants like
    WORD(2) are kept only as the first-listed pronunciation."""

    def __init__(self, entries: dict[str, tuple[str, ...]], origin: str = ""):
        self.entries = entries
        self.origin = origin

    @classmethod
    def load(cls, path: str | Path) -> "PronouncingDictionary":
        entries: dict[str, tuple[str, ...]] = {}
        for raw in Path(path).read_text(encoding="latin-1").splitlines():
            line = raw.strip()
            if not line or line.startswith(";;;") or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                continue
            word = _VARIANT_RE.sub("", parts[0]).lower()
            if word in entries:
                continue  # first pronunciation wins
            entries[word] = tuple(_STRESS_RE.sub("", p) for p in parts[1:])
        if not entries:
            raise InputError(f"pronouncing dictionary {path} contains no entries")
        return cls(entries, origin=str(path))

    def lookup(self, word: str) -> tuple[str, ...]:
        try:
            return self.entries[word.lower()]
        except KeyError:
            near = difflib.get_close_matches(word.lower(), self.entries.keys(), n=3)
            hint = f"; nearest entries: {', '.join(near)}" if near else ""
            raise InputError(f"word {word!r} is not in the dictionary{hint}") from None

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def text_to_phonemes(text: str, dictionary: PronouncingDictionary) -> tuple[str, ...]:
    """Lowercase, strip punctuation (apostrophes stay), look every word up."""
    words = _WORD_RE.findall(text.lower())
    if not words:
        raise InputError("reference text contains no words")
    phonemes: list[str] = []
    for word in words:
        phonemes.extend(dictionary.lookup(word))
    return tuple(phonemes)


def demo_dictionary_path() -> Path:
    return Path(str(resources.files("dysarc").joinpath("data/demo_dict.txt")))


_DEMO: PronouncingDictionary | None = None


def demo_dictionary() -> PronouncingDictionary:
    global _DEMO
    if _DEMO is None:
        _DEMO = PronouncingDictionary.load(demo_dictionary_path())
    return _DEMO
