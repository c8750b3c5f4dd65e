"""Bridge between external embedding encoders and the fusion step.

External encoders hand over a dense similarity matrix (larger = more
similar) in the EASIM binary format; see :mod:`attrint.matrix`.  The
built-in baseline scores entity names by character-trigram cosine so the
pipeline runs with no neural model at all.
"""

from collections import Counter
from urllib.parse import unquote

import numpy as np
import scipy.sparse as sp

from .matrix import SimilarityMatrix, read_dense, resolve_surfaces, write_dense

NGRAM = 3


def load_encoder_matrix(path, kg1, kg2):
    return read_dense(path, kg1, kg2)


def save_encoder_matrix(m, path, kg1, kg2):
    write_dense(m, path, kg1, kg2)


def import_scores(scores, row_surfaces, col_surfaces, kg1, kg2):
    """Wrap a raw score array plus surface lists as a :class:`SimilarityMatrix`."""
    scores = np.asarray(scores, dtype=np.float32)
    if scores.ndim != 2:
        raise ValueError("scores must be a 2-D array")
    rows = resolve_surfaces(row_surfaces, kg1.entities, "source")
    cols = resolve_surfaces(col_surfaces, kg2.entities, "target")
    return SimilarityMatrix(rows, cols, scores)


def minmax_to_frequency(m):
    """Affinely map all scores onto [0, 1] using the global min and max.

    A constant matrix maps to 0.5 everywhere.
    """
    x = m.to_dense().astype(np.float64)
    if x.size == 0:
        raise ValueError("cannot normalize an empty matrix")
    lo, hi = float(x.min()), float(x.max())
    if hi > lo:
        out = (x - lo) / (hi - lo)
    else:
        out = np.full_like(x, 0.5)
    return SimilarityMatrix(m.rows, m.cols, out, normalized=True)


def entity_name(surface):
    """Readable name of an entity: last IRI path segment, unquoted, underscores as spaces."""
    local = surface.rstrip("/")
    for sep in ("/", "#"):
        local = local.rsplit(sep, 1)[-1]
    return unquote(local).replace("_", " ").strip().lower()


def trigrams(name):
    if len(name) < NGRAM:
        return Counter([name]) if name else Counter()
    return Counter(name[i:i + NGRAM] for i in range(len(name) - NGRAM + 1))


def _trigram_rows(names, vocab):
    indptr, indices, counts = [0], [], []
    for name in names:
        for gram, n in sorted(trigrams(name).items()):
            indices.append(vocab.setdefault(gram, len(vocab)))
            counts.append(n)
        indptr.append(len(indices))
    return indptr, indices, counts


def baseline_literal_encoder(kg1, kg2, sources, targets):
    """Character-trigram cosine similarity between entity names (float32, dense)."""
    names1 = [entity_name(kg1.entities.surface(int(e))) for e in sources]
    names2 = [entity_name(kg2.entities.surface(int(e))) for e in targets]
    vocab = {}
    a = _trigram_rows(names1, vocab)
    b = _trigram_rows(names2, vocab)
    width = max(len(vocab), 1)
    m1 = sp.csr_matrix((np.array(a[2], float), a[1], a[0]), shape=(len(names1), width))
    m2 = sp.csr_matrix((np.array(b[2], float), b[1], b[0]), shape=(len(names2), width))

    def l2(m):
        norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        return sp.diags(1.0 / norms) @ m

    sim = (l2(m1) @ l2(m2).T).toarray()
    np.clip(sim, 0.0, 1.0, out=sim)
    return SimilarityMatrix(np.asarray(sources), np.asarray(targets), sim.astype(np.float32))
