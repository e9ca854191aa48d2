from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..match import RankedCandidates


@dataclass
class MetricReport:
    p_at_1: float
    mrr: float
    ties: int
    ranks: list[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.ranks)

    def as_row(self) -> dict:
        return {"n": self.n, "p_at_1": self.p_at_1, "mrr": self.mrr, "ties": self.ties}


def metrics(ranked: Sequence[RankedCandidates]) -> MetricReport:
    """P@1 and mean reciprocal rank of the positive reply."""
    if not ranked:
        raise ValueError("no ranked instances")
    ranks = [r.rank for r in ranked]
    return MetricReport(
        p_at_1=sum(1 for k in ranks if k == 1) / len(ranks),
        mrr=sum(1.0 / k for k in ranks) / len(ranks),
        ties=sum(1 for r in ranked if r.ties),
        ranks=ranks,
    )


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path


def write_report(path, report: MetricReport, name: str = "model") -> Path:
    return write_csv(path, ["name", "n", "p_at_1", "mrr", "ties"],
                     [[name, report.n, f"{report.p_at_1:.6f}", f"{report.mrr:.6f}", report.ties]])
