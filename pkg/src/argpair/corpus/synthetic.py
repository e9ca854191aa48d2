"""Seeded synthetic corpus where each quotation shares a keyword family with its positive reply."""
from __future__ import annotations

import numpy as np

from .instances import NEGATIVES, Argument, DataError, Instance, instance_texts, validate_instance
from .vocab import Vocabulary, build_vocabulary

_SYLLABLES = ("ka", "lo", "mi", "ru", "te", "vo", "sa", "ne", "pi", "du", "ga", "zo", "fe", "hu",
              "ri", "ba", "mo", "ti", "le", "wu")

FILLER = ("i", "think", "that", "the", "a", "is", "it", "we", "should", "really", "not", "do",
          "you", "this", "about", "very", "people", "would", "can", "more", "because", "of", "in",
          "to", "and", "but", "some", "many", "often", "just", "still", "also", "my", "your",
          "they", "be", "make", "have", "most", "so")

FAMILY_SIZE = 5
KEYWORDS_PER_SENTENCE = 4
REPLY_POOL = 4


def _pseudo_words(rng: np.random.Generator, n: int) -> list[str]:
    words: list[str] = []
    seen = set(FILLER)
    while len(words) < n:
        w = "".join(rng.choice(_SYLLABLES, size=int(rng.integers(2, 4))))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _sentence(rng: np.random.Generator, family: list[str]) -> str:
    keys = list(rng.choice(family, size=KEYWORDS_PER_SENTENCE, replace=False))
    filler = list(rng.choice(FILLER, size=int(rng.integers(4, 9)), replace=False))
    words = keys + filler
    rng.shuffle(words)
    return " ".join(words) + " ."


def generate_synthetic(templates: int = 5, instances: int = 50, seed: int = 0,
                       negatives: int = NEGATIVES, pool: int = REPLY_POOL
                       ) -> tuple[list[Instance], Vocabulary]:
    """Emit ``instances`` ranking problems over ``templates`` keyword families.

    Quotation and positive reply draw keywords from one family, each negative
    from a different one; every context holds its argument plus one more
    sentence of the same family and one of a random family.

    Replies come from a fixed pool of ``pool`` sentences per family, so the same
    sentence is the positive in some instances and a negative in others. A
    scorer can then only succeed by relating the reply to the quotation, not by
    recognising the reply on its own.
    """
    if templates < 2:
        raise ValueError("need at least two templates")
    if pool < 1:
        raise ValueError("pool must be >= 1")
    rng = np.random.default_rng(seed)
    words = _pseudo_words(rng, templates * FAMILY_SIZE)
    families = [words[i * FAMILY_SIZE:(i + 1) * FAMILY_SIZE] for i in range(templates)]

    def context(text: str, fam: int) -> list[str]:
        return [text, _sentence(rng, families[fam]),
                _sentence(rng, families[int(rng.integers(templates))])]

    # each pooled reply carries a fixed context of its own
    replies = []
    for f in range(templates):
        texts = [_sentence(rng, families[f]) for _ in range(pool)]
        replies.append([(t, context(t, f)) for t in texts])
    out: list[Instance] = []
    while len(out) < instances:
        f = int(rng.integers(templates))
        others = [g for g in range(templates) if g != f]
        neg_fams = rng.choice(others, size=negatives, replace=len(others) < negatives)
        q = _sentence(rng, families[f])
        pos = replies[f][int(rng.integers(pool))]
        negs = [replies[g][int(rng.integers(pool))] for g in neg_fams]

        inst = Instance(
            id=f"synth-{len(out)}",
            quotation=Argument(q),
            positive=Argument(pos[0]),
            negatives=[Argument(n[0]) for n in negs],
            quotation_context=context(q, f),
            reply_contexts=[list(pos[1])] + [list(n[1]) for n in negs],
            thread_id=f"synth-{len(out)}",
            reply_post=0,
        )
        try:
            validate_instance(inst, negatives=negatives)
        except DataError:
            continue
        out.append(inst)
    return out, build_vocabulary(instance_texts(out), threshold=0)
