"""Subword vocabulary with greedy longest-match segmentation.

Words are pre-tokenized on whitespace and punctuation, then segmented into
pieces from a fixed vocabulary; continuation pieces carry a ``##`` prefix.
A word with no covering segmentation becomes a single ``[UNK]``.  Entity
mentions are masked upstream as atomic ``@TYPE@`` tokens, which the
vocabulary stores as ordinary (case-sensitive) pieces.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
SPECIALS = (PAD, UNK, CLS)

_WORD_RE = re.compile(r"\w+|[^\w\s]")
_MASK_RE = re.compile(r"^@[A-Z0-9_]+@$")


def mask_token(etype: str) -> str:
    """Mask piece for an entity type, e.g. ``Protein`` -> ``@PROTEIN@``."""
    return f"@{etype.upper()}@"


def is_mask(piece: str) -> bool:
    return _MASK_RE.match(piece) is not None


def pretokenize(text: str) -> list[tuple[int, int]]:
    """Character spans of words: runs of word characters, or single
    punctuation marks."""
    return [m.span() for m in _WORD_RE.finditer(text)]


@dataclass
class SubwordVocab:
    """Piece inventory plus the greedy segmenter over it."""

    pieces: list[str]
    lower: bool = True
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        for special in reversed(SPECIALS):
            if special not in self.pieces:
                self.pieces.insert(0, special)
        self._index = {p: i for i, p in enumerate(self.pieces)}
        if len(self._index) != len(self.pieces):
            seen = set()
            dupes = [p for p in self.pieces if p in seen or seen.add(p)]
            raise ValueError(f"duplicate vocabulary pieces: {dupes}")

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def pad_id(self) -> int:
        return self._index[PAD]

    @property
    def unk_id(self) -> int:
        return self._index[UNK]

    @property
    def cls_id(self) -> int:
        return self._index[CLS]

    def id(self, piece: str) -> int:
        return self._index.get(piece, self._index[UNK])

    def piece(self, idx: int) -> str:
        return self.pieces[idx]

    def __contains__(self, piece: str) -> bool:
        return piece in self._index

    def wordpiece(self, word: str) -> list[str]:
        """Greedy longest-match segmentation; ``[UNK]`` when no cover exists."""
        if word in self._index:  # masks and other atomic pieces, case-sensitive
            return [word]
        if self.lower:
            word = word.lower()
        out: list[str] = []
        pos = 0
        while pos < len(word):
            end = len(word)
            piece = None
            while end > pos:
                cand = word[pos:end]
                if pos > 0:
                    cand = "##" + cand
                if cand in self._index:
                    piece = cand
                    break
                end -= 1
            if piece is None:
                return [UNK]
            out.append(piece)
            pos = end
        return out

    def encode_word(self, word: str) -> list[int]:
        return [self.id(p) for p in self.wordpiece(word)]

    # ------------------------------------------------------------------
    # construction and io

    @classmethod
    def build_from_texts(
        cls,
        texts: list[str],
        entity_types: tuple[str, ...] = (),
        extra_pieces: tuple[str, ...] = (),
        lower: bool = True,
    ) -> "SubwordVocab":
        """Whole-word vocabulary over the texts plus single-character
        fallback pieces, so any string of seen characters segments without
        ``[UNK]``.  ``extra_pieces`` lets callers force particular subword
        splits (continuations written with their ``##`` prefix).
        """
        words: set[str] = set()
        chars: set[str] = set()
        for text in texts:
            for a, b in pretokenize(text):
                w = text[a:b]
                if lower:
                    w = w.lower()
                words.add(w)
                chars.update(w)
        pieces = list(SPECIALS)
        pieces += [mask_token(t) for t in sorted(set(entity_types))]
        tail = words | {c for c in chars} | {"##" + c for c in chars}
        tail |= set(extra_pieces)
        pieces += sorted(tail - set(pieces))
        return cls(pieces, lower=lower)

    def save(self, path) -> None:
        from pathlib import Path

        payload = {"lower": self.lower, "pieces": self.pieces}
        Path(path).write_text(json.dumps(payload, indent=0), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SubwordVocab":
        from pathlib import Path

        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(payload["pieces"], lower=payload["lower"])
