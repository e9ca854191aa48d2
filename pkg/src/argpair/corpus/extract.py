"""Quotation-reply instance extraction from discussion threads."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .instances import MAX_TOKENS, MIN_TOKENS, NEGATIVES, Argument, Instance
from .text import normalize, split_quote_blocks, split_sentences, tokenize


@dataclass
class _Pair:
    reply_post: int
    index: int
    quotation: str
    reply: str


def _length_ok(text: str, lo: int, hi: int) -> bool:
    return lo <= len(tokenize(text)) <= hi


def reply_pairs(original_sentences: Sequence[str], reply: str) -> list[tuple[str, str]]:
    """(quotation, first sentence after it) for single-sentence quotes of the original post."""
    op_norm = {normalize(s) for s in original_sentences}
    segments = split_quote_blocks(reply)
    pairs = []
    for k, (is_quote, text) in enumerate(segments):
        if not is_quote:
            continue
        quoted = split_sentences(text)
        if len(quoted) != 1 or normalize(quoted[0]) not in op_norm:
            continue
        if k + 1 >= len(segments) or segments[k + 1][0]:
            continue
        after = split_sentences(segments[k + 1][1])
        if after:
            pairs.append((quoted[0], after[0]))
    return pairs


def reply_body(reply: str) -> list[str]:
    """Sentences of a reply post outside its quote blocks."""
    out = []
    for is_quote, text in split_quote_blocks(reply):
        if not is_quote:
            out.extend(split_sentences(text))
    return out


def _scrub(context: list[str], quotation: str) -> list[str]:
    q = normalize(quotation)
    return [s for s in context if normalize(s) != q and q not in normalize(s)]


def extract_instances(threads: Sequence[tuple], negatives: int = NEGATIVES, seed: int = 0,
                      min_tokens: int = MIN_TOKENS, max_tokens: int = MAX_TOKENS) -> list[Instance]:
    """Build instances from ``(thread_id, original_post, replies)`` tuples.

    ``(original_post, replies)`` pairs are accepted too, with the position used
    as thread id. Candidates are length-filtered before negatives are drawn;
    the seed only affects which negatives are drawn.
    """
    out: list[Instance] = []
    for t_index, thread in enumerate(threads):
        if len(thread) == 2:
            thread_id, (op, replies) = str(t_index), thread
        else:
            thread_id, op, replies = thread
        op_sents = split_sentences(op)
        bodies = [reply_body(r) for r in replies]
        pairs: list[_Pair] = []
        for p_index, reply in enumerate(replies):
            for k, (q, r) in enumerate(reply_pairs(op_sents, reply)):
                pairs.append(_Pair(p_index, k, q, r))
        kept = [p for p in pairs if _length_ok(p.quotation, min_tokens, max_tokens)
                and _length_ok(p.reply, min_tokens, max_tokens)]
        rng = random.Random(f"{seed}:{thread_id}")
        for pair in kept:
            pool = [p for p in kept if p.reply_post != pair.reply_post
                    and normalize(p.reply) != normalize(pair.reply)]
            if len(pool) < negatives:
                continue
            drawn = rng.sample(pool, negatives)
            out.append(Instance(
                id=f"{thread_id}-{pair.reply_post}-{pair.index}",
                quotation=Argument(pair.quotation),
                positive=Argument(pair.reply),
                negatives=[Argument(p.reply) for p in drawn],
                quotation_context=list(op_sents),
                reply_contexts=[_scrub(bodies[pair.reply_post], pair.quotation)]
                + [_scrub(bodies[p.reply_post], pair.quotation) for p in drawn],
                thread_id=thread_id,
                reply_post=pair.reply_post,
            ))
    return out
