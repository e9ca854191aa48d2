from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .instances import Instance
from .text import split_sentences, tokenize


@dataclass
class MeanStd:
    mean: float
    std: float

    def __str__(self) -> str:
        return f"{self.mean:.1f}±{self.std:.1f}"


def _ms(values) -> MeanStd:
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return MeanStd(0.0, 0.0)
    return MeanStd(float(arr.mean()), float(arr.std()))  # population std


@dataclass
class CorpusStats:
    args_per_post: MeanStd
    tokens_per_post: MeanStd
    tokens_per_quotation: MeanStd
    tokens_per_positive: MeanStd
    tokens_per_negative: MeanStd
    max_pairs_per_post_pair: int
    pairs_per_post_pair: MeanStd

    def as_rows(self) -> list[tuple[str, str]]:
        return [
            ("# of arg. per post", str(self.args_per_post)),
            ("# of token per post", str(self.tokens_per_post)),
            ("# of token per q", str(self.tokens_per_quotation)),
            ("# of token per p_r", str(self.tokens_per_positive)),
            ("# of token per n_r", str(self.tokens_per_negative)),
            ("max # of q-p_r pairs", str(self.max_pairs_per_post_pair)),
            ("avg. # of q-p_r pairs", str(self.pairs_per_post_pair)),
        ]

    def to_dict(self) -> dict:
        return asdict(self)


def corpus_stats(instances: Sequence[Instance], posts: Sequence[str]) -> CorpusStats:
    """Dataset overview statistics.

    Post rows are computed over ``posts``; a post pair is the (original post,
    reply post) combination an instance's positive came from.
    """
    pair_counts = Counter((inst.thread_id, inst.reply_post) if inst.thread_id else inst.id
                          for inst in instances)
    return CorpusStats(
        args_per_post=_ms(len(split_sentences(p)) for p in posts),
        tokens_per_post=_ms(len(tokenize(p)) for p in posts),
        tokens_per_quotation=_ms(len(i.quotation) for i in instances),
        tokens_per_positive=_ms(len(i.positive) for i in instances),
        tokens_per_negative=_ms(len(a) for i in instances for a in i.negatives),
        max_pairs_per_post_pair=max(pair_counts.values(), default=0),
        pairs_per_post_pair=_ms(pair_counts.values()),
    )
