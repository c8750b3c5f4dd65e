"""Hits@k / MRR evaluation of a similarity matrix against gold pairs.

The candidate pool for a set of gold pairs is the set of their targets.
Targets are ordered by descending score; ties go to the target whose
column comes first, so results never depend on chance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AttrIntError
from .matrix import SimilarityMatrix


class EvaluationError(AttrIntError):
    pass


def _positions(matrix, pairs):
    rpos, cpos = matrix.row_position(), matrix.col_position()
    rows, cols = [], []
    for s, t in pairs:
        if s not in rpos:
            raise EvaluationError(f"source entity {s} is not a row of the matrix")
        if t not in cpos:
            raise EvaluationError(f"target entity {t} is not a column of the matrix")
        rows.append(rpos[s])
        cols.append(cpos[t])
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)


def _block(matrix, rows, pool):
    if matrix.is_sparse:
        return matrix.data[rows][:, pool].toarray()
    return np.asarray(matrix.data)[np.ix_(rows, pool)].astype(np.float64)


def rank(matrix, pairs, chunk=2048):
    """1-based rank of each gold target among the pairs' targets, keyed by source id."""
    pairs = [(int(s), int(t)) for s, t in pairs]
    if not pairs:
        return {}
    rows, gold_cols = _positions(matrix, pairs)
    pool = np.unique(gold_cols)
    gold_in_pool = np.searchsorted(pool, gold_cols)
    order = np.arange(len(pool))
    out = np.empty(len(pairs), dtype=np.int64)
    for lo in range(0, len(pairs), chunk):
        hi = min(lo + chunk, len(pairs))
        block = _block(matrix, rows[lo:hi], pool)
        g = gold_in_pool[lo:hi]
        gold = block[np.arange(hi - lo), g][:, None]
        greater = (block > gold).sum(axis=1)
        ties_before = ((block == gold) & (order[None, :] < g[:, None])).sum(axis=1)
        out[lo:hi] = 1 + greater + ties_before
    return {s: int(r) for (s, _), r in zip(pairs, out)}


@dataclass
class RankingReport:
    hits_at: dict
    mrr: float
    ranks: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_tsv(self):
        lines = [f"# {k}={self.metadata[k]}" for k in sorted(self.metadata)]
        lines.append("metric\tvalue")
        for k in sorted(self.hits_at):
            lines.append(f"hits@{k}\t{self.hits_at[k]!r}")
        if self.mrr is not None:
            lines.append(f"mrr\t{self.mrr!r}")
        lines.append(f"n\t{len(self.ranks) or self.metadata.get('n', 0)}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_tsv())


def metrics(ranks, ks=(1, 10)):
    """Hits@k for each ``k`` and mean reciprocal rank."""
    values = list(ranks.values()) if isinstance(ranks, dict) else list(ranks)
    if not values:
        raise EvaluationError("no ranks to summarise")
    n = len(values)
    hits = {k: sum(1 for r in values if r <= k) / n for k in ks}
    mrr = math.fsum(1.0 / r for r in values) / n
    return RankingReport(hits, mrr, dict(ranks) if isinstance(ranks, dict) else dict(enumerate(values)))


def metrics_top1(predictions, gold_pairs):
    """Hits@1 of a top-1 prediction map ``source -> target``."""
    gold_pairs = list(gold_pairs)
    if not gold_pairs:
        raise EvaluationError("no gold pairs")
    missing = [s for s, _ in gold_pairs if s not in predictions]
    if missing:
        raise EvaluationError(f"no prediction for source entity {missing[0]}")
    return sum(1 for s, t in gold_pairs if predictions[s] == t) / len(gold_pairs)


def transpose(matrix):
    data = matrix.data.T.tocsr() if matrix.is_sparse else np.asarray(matrix.data).T
    return SimilarityMatrix(matrix.cols, matrix.rows, data, matrix.normalized)


def evaluate(matrix, pairs, ks=(1, 10), bidirectional=False):
    """Rank and summarise; with ``bidirectional`` the two directions are averaged."""
    pairs = list(pairs)
    report = metrics(rank(matrix, pairs), ks)
    if bidirectional:
        back = metrics(rank(transpose(matrix), [(t, s) for s, t in pairs]), ks)
        report = RankingReport({k: (report.hits_at[k] + back.hits_at[k]) / 2 for k in ks},
                               (report.mrr + back.mrr) / 2, report.ranks, {"bidirectional": True})
    return report


def top1(matrix, sources, targets):
    """Best target for each source among ``targets`` (first column wins ties)."""
    rpos, cpos = matrix.row_position(), matrix.col_position()
    pool = np.array(sorted(cpos[int(t)] for t in set(targets)), dtype=np.int64)
    rows = np.array([rpos[int(s)] for s in sources], dtype=np.int64)
    if len(rows) == 0:
        return {}
    best = _block(matrix, rows, pool).argmax(axis=1)
    return {int(s): int(matrix.cols[pool[b]]) for s, b in zip(sources, best)}


def format_table(reports, ks=(1, 10)):
    """Plain-text table of several named reports, percentages like published tables."""
    header = ["method"] + [f"H@{k}" for k in ks] + ["MRR"]
    rows = []
    for name, rep in reports:
        cells = [name]
        for k in ks:
            v = rep.hits_at.get(k)
            cells.append("-" if v is None else f"{100 * v:.1f}")
        cells.append("-" if rep.mrr is None else f"{rep.mrr:.3f}")
        rows.append(cells)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r) for r in [header] + rows)
