"""Fusing encoder and attribute similarities.

Two strategies:

* result correction (RC): keep the encoder's top-1 prediction unless the
  attribute matrix is confident about a row, in which case its best target
  wins;
* parameter search (PS): treat each cell of both matrices as a belief
  ``<frequency, confidence>`` about "source ~ target", merge the two beliefs
  with the NAL revision rule and score the cell by the expectation of the
  result.  The two confidences are global parameters chosen by grid search
  on validation Hits@1.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AttrIntError
from .matrix import SimilarityMatrix

EPS = 1e-6
DEFAULT_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


class InteractionError(AttrIntError):
    pass


@dataclass(frozen=True)
class Belief:
    f: float
    c: float

    def __post_init__(self):
        if not (0.0 <= self.f <= 1.0 and 0.0 <= self.c <= 1.0):
            raise ValueError(f"belief components must lie in [0, 1], got ({self.f}, {self.c})")


def _cap(c):
    return min(c, 1.0 - EPS)


def revise(b1, b2):
    """Revision of two beliefs drawn from disjoint evidence.

    A premise with zero confidence is inert and the other premise is returned
    unchanged.  When both have zero confidence the frequencies are averaged
    and confidence stays 0.  Confidences are capped at ``1 - EPS`` since the
    rule is singular at 1.
    """
    c1, c2 = _cap(b1.c), _cap(b2.c)
    if c1 == 0.0 and c2 == 0.0:
        return Belief((b1.f + b2.f) / 2.0, 0.0)
    if c2 == 0.0:
        return Belief(b1.f, c1)
    if c1 == 0.0:
        return Belief(b2.f, c2)
    w1 = c1 * (1.0 - c2)
    w2 = c2 * (1.0 - c1)
    f = (b1.f * w1 + b2.f * w2) / (w1 + w2)
    c = (w1 + w2) / (w1 + w2 + (1.0 - c1) * (1.0 - c2))
    return Belief(min(max(f, 0.0), 1.0), min(max(c, 0.0), 1.0))


def expectation(b):
    return b.c * (b.f - 0.5) + 0.5


def revised_expectation(f1, c1, f2, c2):
    """Vectorised ``expectation(revise(<f1, c1>, <f2, c2>))`` for confidences in (0, 1)."""
    w1 = c1 * (1.0 - c2)
    w2 = c2 * (1.0 - c1)
    f = (f1 * w1 + f2 * w2) / (w1 + w2)
    c = (w1 + w2) / (w1 + w2 + (1.0 - c1) * (1.0 - c2))
    return c * (f - 0.5) + 0.5


def _check_confidence(c, name):
    if not EPS <= c <= 1.0 - EPS:
        raise ValueError(f"{name} must lie in [{EPS}, {1 - EPS}], got {c}")


@dataclass(frozen=True)
class PsConfig:
    c_ea: float = 0.5
    c_at: float = 0.5
    grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        _check_confidence(self.c_ea, "c_ea")
        _check_confidence(self.c_at, "c_at")
        if not self.grid:
            raise ValueError("grid must not be empty")
        for g in self.grid:
            if not 0.0 < g < 1.0:
                raise ValueError(f"grid values must lie strictly inside (0, 1), got {g}")


@dataclass(frozen=True)
class RcConfig:
    tau: float = 0.9
    margin: float = 0.0

    def __post_init__(self):
        # tau above 1 is allowed and disables every override
        if self.tau < 0.0:
            raise ValueError("tau must be >= 0")
        if self.margin < 0.0:
            raise ValueError("margin must be >= 0")


def _check_inputs(s_ea, s_at):
    if not s_ea.same_axes(s_at):
        raise InteractionError("encoder and attribute matrices must share row and column order")
    if not (s_ea.normalized and s_at.normalized):
        raise InteractionError("both matrices must hold frequencies in [0, 1]; "
                               "normalize the encoder matrix with minmax_to_frequency")


def _combine(f_ea, r, c, f_at, c_ea, c_at):
    out = c_ea * (f_ea - 0.5) + 0.5
    if len(r):
        out[r, c] = revised_expectation(f_ea[r, c], c_ea, f_at, c_at)
    return out


def ps_combine(s_ea, s_at, cfg):
    """Combined matrix of revised-belief expectations.

    Cells with attribute evidence use ``revise(<f_ea, c_ea>, <f_at, c_at>)``;
    cells the attribute matrix does not store fall back to the encoder belief.
    """
    _check_inputs(s_ea, s_at)
    f_ea = s_ea.to_dense().astype(np.float64)
    r, c, v = s_at.entries()
    out = _combine(f_ea, r, c, np.asarray(v, dtype=np.float64), cfg.c_ea, cfg.c_at)
    return SimilarityMatrix(s_ea.rows, s_ea.cols, out, normalized=True)


@dataclass
class GridResult:
    c_ea: float
    c_at: float
    hits1: float
    surface: list = field(default_factory=list)  # (c_ea, c_at, hits@1), sorted

    def to_tsv(self):
        lines = ["c_ea\tc_at\thits1"]
        lines += [f"{a!r}\t{b!r}\t{h!r}" for a, b, h in self.surface]
        return "\n".join(lines) + "\n"


def grid_search(s_ea, s_at, valid_pairs, grid=DEFAULT_GRID):
    """Pick ``(c_ea, c_at)`` maximising validation Hits@1 over ``grid x grid``.

    Candidates are the validation targets.  Ties go to the smaller ``c_at``,
    then the smaller ``c_ea``.
    """
    grid = sorted(set(grid))
    if not grid:
        raise ValueError("grid must not be empty")
    for g in grid:
        _check_confidence(g, "grid value")
    valid_pairs = sorted((int(s), int(t)) for s, t in valid_pairs)
    if not valid_pairs:
        raise ValueError("validation pairs must not be empty")
    _check_inputs(s_ea, s_at)
    rows = np.array([s for s, _ in valid_pairs], dtype=np.int64)
    cols = np.array(sorted(t for _, t in valid_pairs), dtype=np.int64)
    ea = s_ea.reindex(rows, cols)
    at = s_at.reindex(rows, cols)
    f_ea = ea.to_dense().astype(np.float64)
    r, c, v = at.entries()
    v = np.asarray(v, dtype=np.float64)
    gold = np.searchsorted(cols, [t for _, t in valid_pairs])

    hits = {}
    for c_ea in grid:
        for c_at in grid:
            combined = _combine(f_ea, r, c, v, c_ea, c_at)
            hits[(c_ea, c_at)] = int((combined.argmax(axis=1) == gold).sum())

    best = None
    for c_at in grid:
        for c_ea in grid:
            if best is None or hits[(c_ea, c_at)] > hits[best]:
                best = (c_ea, c_at)
    n = len(valid_pairs)
    surface = [(a, b, hits[(a, b)] / n) for a, b in sorted(hits)]
    return GridResult(best[0], best[1], hits[best] / n, surface)


def parse_grid(text):
    """``"0.05:0.95:0.05"`` (start:stop:step, inclusive) or ``"0.2,0.5,0.8"``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(x) for x in text.split(",") if x.strip())


def rc_overrides(s_at, cfg):
    """Rows where the attribute matrix is confident: ``source -> best target``.

    A row qualifies when its best score is at least ``tau`` and beats the
    runner-up by at least ``margin``.  Unstored cells count as 0; the
    leftmost column wins ties for best.
    """
    m = s_at.data.tocsr() if s_at.is_sparse else None
    dense = None if m is not None else s_at.to_dense()
    n_cols = s_at.shape[1]
    out = {}
    for i, src in enumerate(s_at.rows):
        if m is not None:
            lo, hi = m.indptr[i], m.indptr[i + 1]
            idx, vals = m.indices[lo:hi], m.data[lo:hi]
            if len(vals) < n_cols:
                # unstored cells score 0
                idx = np.append(idx, -1)
                vals = np.append(vals, 0.0)
        else:
            idx, vals = np.arange(n_cols), dense[i]
        if len(vals) == 0:
            continue
        order = np.lexsort((np.where(idx < 0, n_cols, idx), -vals))
        best = vals[order[0]]
        second = vals[order[1]] if len(vals) > 1 else 0.0
        if best >= cfg.tau and best - second >= cfg.margin and idx[order[0]] >= 0:
            out[int(src)] = int(s_at.cols[idx[order[0]]])
    return out


def rc_combine(predictions, s_at, cfg):
    """Replace encoder top-1 predictions by confident attribute matches."""
    out = dict(predictions)
    for src, tgt in rc_overrides(s_at, cfg).items():
        if src in out:
            out[src] = tgt
    return out
