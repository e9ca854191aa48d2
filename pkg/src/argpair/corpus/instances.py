"""Ranking instances, their validation, id encoding and the dataset file format."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .text import normalize, tokenize
from .vocab import Vocabulary

log = logging.getLogger(__name__)

MIN_TOKENS = 7
MAX_TOKENS = 45
NEGATIVES = 4
MAX_CONTEXT_ARGS = 40
MAX_ARG_TOKENS = 60


class DataError(ValueError):
    """A record or instance violates the dataset invariants."""


@dataclass(frozen=True)
class Argument:
    text: str

    @property
    def tokens(self) -> list[str]:
        return tokenize(self.text)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Instance:
    """One ranking problem: a quotation against one positive and ``u`` negative replies.

    ``reply_contexts[0]`` belongs to the positive reply, the rest follow
    ``negatives`` in order.
    """

    id: str
    quotation: Argument
    positive: Argument
    negatives: list[Argument]
    quotation_context: list[str] = field(default_factory=list)
    reply_contexts: list[list[str]] = field(default_factory=list)
    thread_id: str = ""
    reply_post: int = -1

    @property
    def candidates(self) -> list[Argument]:
        return [self.positive, *self.negatives]


@dataclass
class EncodedInstance:
    id: str
    quotation: np.ndarray
    candidates: list[np.ndarray]
    quotation_context: list[np.ndarray]
    reply_contexts: list[list[np.ndarray]]
    positive_index: int = 0


def validate_instance(inst: Instance, negatives: int = NEGATIVES,
                      min_tokens: int = MIN_TOKENS, max_tokens: int = MAX_TOKENS) -> None:
    if len(inst.negatives) != negatives:
        raise DataError(f"{inst.id}: expected {negatives} negatives, got {len(inst.negatives)}")
    if len(inst.reply_contexts) != negatives + 1:
        raise DataError(f"{inst.id}: expected {negatives + 1} reply contexts, "
                        f"got {len(inst.reply_contexts)}")
    for role, arg in [("quotation", inst.quotation), ("positive", inst.positive)] + [
            (f"negative[{i}]", a) for i, a in enumerate(inst.negatives)]:
        n = len(arg)
        if not min_tokens <= n <= max_tokens:
            raise DataError(f"{inst.id}: {role} has {n} tokens, outside [{min_tokens}, {max_tokens}]")
    q = normalize(inst.quotation.text)
    for i, ctx in enumerate(inst.reply_contexts):
        joined = " ".join(normalize(s) for s in ctx)
        if any(normalize(s) == q for s in ctx) or (q and f" {q} " in f" {joined} "):
            raise DataError(f"{inst.id}: quotation appears in reply context {i}")


def encode_instance(inst: Instance, vocab: Vocabulary, max_context_args: int = MAX_CONTEXT_ARGS,
                    max_arg_tokens: int = MAX_ARG_TOKENS) -> EncodedInstance:
    """Map text to ids (unknown tokens to UNK), truncating arguments and contexts.

    Context sentences that tokenize to nothing are dropped; an empty quotation
    or reply is an error.
    """
    def ids(arg_text: str, role: str) -> np.ndarray:
        out = vocab.encode(arg_text)[:max_arg_tokens]
        if not out:
            raise DataError(f"{inst.id}: {role} is empty after tokenization")
        return np.asarray(out, dtype=np.int64)

    def context(sents: list[str]) -> list[np.ndarray]:
        out = []
        for s in sents[:max_context_args]:
            v = vocab.encode(s)[:max_arg_tokens]
            if v:
                out.append(np.asarray(v, dtype=np.int64))
        return out

    return EncodedInstance(
        id=inst.id,
        quotation=ids(inst.quotation.text, "quotation"),
        candidates=[ids(a.text, f"reply[{i}]") for i, a in enumerate(inst.candidates)],
        quotation_context=context(inst.quotation_context),
        reply_contexts=[context(c) for c in inst.reply_contexts],
    )


def instance_texts(instances: Iterable[Instance], contexts: bool = True) -> Iterator[str]:
    seen_ctx: set[int] = set()
    for inst in instances:
        yield inst.quotation.text
        for a in inst.candidates:
            yield a.text
        if contexts:
            for ctx in [inst.quotation_context, *inst.reply_contexts]:
                if id(ctx) in seen_ctx:
                    continue
                seen_ctx.add(id(ctx))
                yield from ctx


def instance_to_record(inst: Instance) -> dict:
    replies = [{"text": inst.positive.text, "label": 1, "context": inst.reply_contexts[0]}]
    replies += [{"text": a.text, "label": 0, "context": c}
                for a, c in zip(inst.negatives, inst.reply_contexts[1:])]
    rec = {"id": inst.id,
           "quotation": {"text": inst.quotation.text, "context": inst.quotation_context},
           "replies": replies}
    if inst.thread_id:
        rec["thread_id"] = inst.thread_id
        rec["reply_post"] = inst.reply_post
    return rec


def record_to_instance(rec: dict) -> Instance:
    try:
        replies = rec["replies"]
        labels = [int(r["label"]) for r in replies]
        if sorted(set(labels)) not in ([0, 1], [1]) or labels.count(1) != 1:
            raise DataError(f"{rec.get('id')}: need exactly one label-1 reply, labels={labels}")
        pos = labels.index(1)
        order = [pos] + [i for i in range(len(replies)) if i != pos]
        return Instance(
            id=str(rec["id"]),
            quotation=Argument(rec["quotation"]["text"]),
            positive=Argument(replies[pos]["text"]),
            negatives=[Argument(replies[i]["text"]) for i in order[1:]],
            quotation_context=list(rec["quotation"].get("context", [])),
            reply_contexts=[list(replies[i].get("context", [])) for i in order],
            thread_id=str(rec.get("thread_id", "")),
            reply_post=int(rec.get("reply_post", -1)),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed record {rec.get('id') if isinstance(rec, dict) else rec!r}: "
                        f"missing {exc}") from exc


def write_dataset(path, instances: Iterable[Instance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_record(inst), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_dataset(path, validate: bool = True, negatives: Optional[int] = NEGATIVES) -> list[Instance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            inst = record_to_instance(rec)
            if validate:
                validate_instance(inst, negatives=negatives)
            out.append(inst)
    return out


def read_threads(path) -> list[tuple[str, str, list[str]]]:
    """Read ``{thread_id, original_post, replies}`` records."""
    threads = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                threads.append((str(rec["thread_id"]), rec["original_post"], list(rec["replies"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad thread record ({exc})") from exc
    return threads
