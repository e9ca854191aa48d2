from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from .text import tokenize

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<bos>", "<eos>")


class Vocabulary:
    """Token/id map with the four reserved ids first.

    Kept tokens are ordered by descending corpus frequency, ties alphabetical.
    """

    def __init__(self, tokens: Sequence[str] = (), threshold: int = 0,
                 counts: dict[str, int] | None = None):
        self.threshold = threshold
        self.counts = dict(counts or {})
        self.id_to_token: list[str] = list(RESERVED)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            if tok in self.token_to_id:
                raise ValueError(f"duplicate vocabulary entry {tok!r}")
            self.token_to_id[tok] = len(self.id_to_token)
            self.id_to_token.append(tok)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode_tokens(self, tokens: Iterable[str]) -> list[int]:
        get = self.token_to_id.get
        return [get(t, UNK) for t in tokens]

    def encode(self, text: str) -> list[int]:
        return self.encode_tokens(tokenize(text))

    def decode(self, ids: Iterable[int]) -> str:
        return " ".join(self.id_to_token[i] for i in ids if i not in (PAD, BOS, EOS))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({
            "threshold": self.threshold,
            "tokens": self.id_to_token[len(RESERVED):],
            "counts": self.counts,
        }))

    @classmethod
    def load(cls, path) -> "Vocabulary":
        raw = json.loads(Path(path).read_text())
        return cls(raw["tokens"], raw.get("threshold", 0), raw.get("counts"))


def build_vocabulary(documents: Iterable[str], threshold: int = 15) -> Vocabulary:
    """Keep tokens whose frequency is strictly greater than ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    counts: Counter[str] = Counter()
    for doc in documents:
        counts.update(tokenize(doc))
    kept = sorted((t for t, c in counts.items() if c > threshold and t not in RESERVED),
                  key=lambda t: (-counts[t], t))
    return Vocabulary(kept, threshold, {t: counts[t] for t in kept})
