"""Discrete-code clustering and posterior export."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..corpus.instances import EncodedInstance
from ..model import Model


@dataclass
class CodeCluster:
    codes: tuple[int, ...]
    members: list[str]

    @property
    def size(self) -> int:
        return len(self.members)


def group_by_codes(arg_ids: Sequence[str], codes: np.ndarray) -> list[CodeCluster]:
    """Group arguments with identical code sets; largest clusters first, ties by code."""
    groups: dict[tuple[int, ...], list[str]] = defaultdict(list)
    for aid, row in zip(arg_ids, codes):
        groups[tuple(int(c) for c in row)].append(aid)
    clusters = [CodeCluster(k, v) for k, v in groups.items()]
    clusters.sort(key=lambda c: (-c.size, c.codes))
    return clusters


def cluster_by_code(model: Model, arguments: Sequence[tuple[str, np.ndarray]],
                    batch_size: int = 256) -> list[CodeCluster]:
    ids, all_codes = [], []
    for start in range(0, len(arguments), batch_size):
        chunk = arguments[start:start + batch_size]
        codes, _ = model.latent_codes([seq for _, seq in chunk])
        ids.extend(a for a, _ in chunk)
        all_codes.append(codes)
    if not ids:
        return []
    return group_by_codes(ids, np.concatenate(all_codes))


def instance_arguments(instances: Sequence[EncodedInstance]) -> list[tuple[str, np.ndarray]]:
    """Quotations and candidate replies keyed ``<instance>/q`` and ``<instance>/r<j>``."""
    out = []
    for inst in instances:
        out.append((f"{inst.id}/q", inst.quotation))
        out.extend((f"{inst.id}/r{j}", c) for j, c in enumerate(inst.candidates))
    return out


def tv_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Total-variation distance 0.5 * sum|p - q| over the last axis."""
    return 0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum(axis=-1)


POSTERIOR_HEADER = ("arg_id", "role", "latent_index", "category", "probability")
SIMILARITY_HEADER = ("arg_id", "role", "latent_index", "tv_distance")


def posterior_tables(inst: EncodedInstance, posteriors: np.ndarray):
    """Rows for the posterior and per-latent similarity tables.

    ``posteriors`` (1 + C, M, K): the quotation first, then candidates in order.
    Latent and category indices are 1-based.
    """
    roles = ["quotation"] + ["positive" if j == inst.positive_index else "negative"
                             for j in range(len(inst.candidates))]
    arg_ids = [f"{inst.id}/q"] + [f"{inst.id}/r{j}" for j in range(len(inst.candidates))]
    post_rows, sim_rows = [], []
    for aid, role, p in zip(arg_ids, roles, posteriors):
        for i, dist in enumerate(p, 1):
            post_rows.extend((aid, role, i, k, float(v)) for k, v in enumerate(dist, 1))
    tv = tv_distance(posteriors[None, 0], posteriors[1:])  # (C, M)
    for aid, role, row in zip(arg_ids[1:], roles[1:], tv):
        sim_rows.extend((aid, role, i, float(d)) for i, d in enumerate(row, 1))
    return post_rows, sim_rows


def export_posteriors(model: Model, inst: EncodedInstance):
    _, post = model.latent_codes([inst.quotation, *inst.candidates])
    return posterior_tables(inst, post)


def mean_tv_by_candidate(sim_rows) -> dict[str, float]:
    acc: dict[str, list[float]] = defaultdict(list)
    for aid, _, _, d in sim_rows:
        acc[aid].append(d)
    return {k: float(np.mean(v)) for k, v in acc.items()}
