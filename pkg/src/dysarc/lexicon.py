"""Phoneme-class lexicon: label <-> symbol-id mapping including the blank.

Symbol ids are fixed across the package: 0 is epsilon (never a class),
1 is the CTC blank, and phonemes follow in file order. The shipped default
lexicon is the 39 stress-free CMU/ARPABET phonemes in alphabetical order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import InputError
from .fst import EPSILON_LABEL, symbol_table

BLANK_LABEL = "<blank>"
BLANK_ID = 1

ARPABET = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER",
    "EY", "F", "G", "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW",
    "OY", "P", "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)


@dataclass(frozen=True)
class Lexicon:
    """Ordered class symbols (blank first, then phonemes) and their id maps."""

    symbols: tuple[str, ...]
    _class_id: dict[str, int] = field(init=False, repr=False, compare=False)
    _phoneme_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.symbols or self.symbols[0] != BLANK_LABEL:
            raise InputError(f"first lexicon symbol must be {BLANK_LABEL!r}")
        if EPSILON_LABEL in self.symbols:
            raise InputError(f"{EPSILON_LABEL!r} is reserved and may not appear in a lexicon")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError("lexicon labels must be unique")
        # Class ids live in the frame-label alphabet (blank = 1); phoneme ids
        # live in the output alphabet that has no blank.
        object.__setattr__(self, "_class_id", {s: i + 1 for i, s in enumerate(self.symbols)})
        object.__setattr__(self, "_phoneme_id", {p: i + 1 for i, p in enumerate(self.phonemes)})

    @property
    def C(self) -> int:
        """Number of emission classes, blank included."""
        return len(self.symbols)

    @property
    def phonemes(self) -> tuple[str, ...]:
        return self.symbols[1:]

    def class_table(self) -> tuple[str, ...]:
        """Frame-label alphabet: <eps>, <blank>, phonemes."""
        return symbol_table(self.symbols)

    def phoneme_table(self) -> tuple[str, ...]:
        """Phoneme-only alphabet: <eps>, phonemes (no blank)."""
        return symbol_table(self.phonemes)

    def class_id(self, label: str) -> int:
        try:
            return self._class_id[label]
        except KeyError:
            raise InputError(f"label {label!r} is not in the lexicon") from None

    def phoneme_id(self, label: str) -> int:
        try:
            return self._phoneme_id[label]
        except KeyError:
            raise InputError(f"{label!r} is not a phoneme of the lexicon") from None

    def has_phoneme(self, label: str) -> bool:
        return label in self._phoneme_id

    def check_phonemes(self, labels) -> tuple[str, ...]:
        labels = tuple(labels)
        unknown = sorted({p for p in labels if p not in self._phoneme_id})
        if unknown:
            raise InputError(f"phonemes not in lexicon: {', '.join(unknown)}")
        return labels


def load_lexicon(path: str | Path) -> Lexicon:
    """Read a lexicon file: one label per line, `#` comment lines allowed."""
    labels = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        labels.append(line)
    if not labels:
        raise InputError(f"lexicon file {path} contains no labels")
    return Lexicon(tuple(labels))


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(lexicon_text(lexicon), encoding="utf-8")


def lexicon_text(lexicon: Lexicon) -> str:
    return "\n".join(lexicon.symbols) + "\n"


def default_lexicon_path() -> Path:
    return Path(str(resources.files("dysarc").joinpath("data/lexicon.txt")))


_DEFAULT: Lexicon | None = None


def default_lexicon() -> Lexicon:
    """The shipped blank + 39-phoneme ARPABET lexicon."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_lexicon(default_lexicon_path())
    return _DEFAULT
