"""Similarity matrices over (source entity x target entity) and their file formats.

Two on-disk encodings are supported:

* ``EASIM`` binary, used for dense encoder and combined matrices::

      b"EASIM\\x01" | u32 rows | u32 cols
      | rows x (u32 byte length, UTF-8 surface)
      | cols x (u32 byte length, UTF-8 surface)
      | rows*cols little-endian float32, row-major

* ``SIMSP`` text, used for the sparse attribute matrix: a header line
  ``#SIMSP v1 rows=<n> cols=<m>`` followed by ``row<TAB>col<TAB>score`` lines,
  with the row and column entity surfaces in ``<path>.rows`` / ``<path>.cols``.

All integers are little-endian.  Larger scores always mean "more similar".
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    AttrIntError,
    DimensionMismatchError,
    HeaderError,
    TruncatedPayloadError,
    UnresolvedSurfaceError,
)

EASIM_MAGIC = b"EASIM\x01"
SIMSP_MAGIC = "#SIMSP v1"


@dataclass(eq=False)
class SimilarityMatrix:
    """Scores for ``rows`` (ids in the first graph) x ``cols`` (ids in the second).

    ``data`` is either a dense 2-D ndarray or a ``scipy.sparse.csr_matrix``.
    Sparse cells that are not stored carry no evidence.
    """

    rows: np.ndarray
    cols: np.ndarray
    data: object
    normalized: bool = False

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        if self.data.shape != (len(self.rows), len(self.cols)):
            raise DimensionMismatchError(
                f"data shape {self.data.shape} does not match {len(self.rows)} rows x {len(self.cols)} cols")
        if len(np.unique(self.rows)) != len(self.rows) or len(np.unique(self.cols)) != len(self.cols):
            raise ValueError("row and column ids must be unique")
        if sp.issparse(self.data):
            self.data = sp.csr_matrix(self.data)
            self.data.sum_duplicates()
            self.data.sort_indices()

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_sparse(self):
        return sp.issparse(self.data)

    def to_dense(self):
        if self.is_sparse:
            return self.data.toarray()
        return np.asarray(self.data)

    def row_position(self):
        return {int(e): i for i, e in enumerate(self.rows)}

    def col_position(self):
        return {int(e): i for i, e in enumerate(self.cols)}

    def same_axes(self, other):
        return np.array_equal(self.rows, other.rows) and np.array_equal(self.cols, other.cols)

    def reindex(self, rows, cols):
        """Return the matrix restricted/reordered to ``rows`` x ``cols``.

        Every requested id must already be present.
        """
        rpos, cpos = self.row_position(), self.col_position()
        try:
            ri = np.array([rpos[int(r)] for r in rows], dtype=np.int64)
            ci = np.array([cpos[int(c)] for c in cols], dtype=np.int64)
        except KeyError as exc:
            raise AttrIntError(f"entity id {exc.args[0]} not in matrix") from None
        if self.is_sparse:
            data = self.data[ri][:, ci]
        else:
            data = np.asarray(self.data)[np.ix_(ri, ci)]
        return SimilarityMatrix(rows, cols, data, self.normalized)

    def entries(self):
        """Stored cells as (row position, col position, score) arrays, row-major."""
        if self.is_sparse:
            coo = self.data.tocoo()
            order = np.lexsort((coo.col, coo.row))
            return coo.row[order], coo.col[order], coo.data[order]
        r, c = np.indices(self.shape)
        return r.ravel(), c.ravel(), np.asarray(self.data).ravel()


def resolve_surfaces(surfaces, vocab, side):
    ids = []
    for s in surfaces:
        i = vocab.get(s)
        if i is None:
            raise UnresolvedSurfaceError(f"{side} entity {s!r} not found in graph")
        ids.append(i)
    return np.array(ids, dtype=np.int64)


def write_dense(m, path, kg1, kg2):
    """Write ``m`` in EASIM format (scores stored as float32)."""
    out = bytearray(EASIM_MAGIC)
    out += struct.pack("<II", *m.shape)
    for vocab, ids in ((kg1.entities, m.rows), (kg2.entities, m.cols)):
        for i in ids:
            b = vocab.surface(int(i)).encode("utf-8")
            out += struct.pack("<I", len(b)) + b
    out += np.ascontiguousarray(m.to_dense(), dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def read_dense(path, kg1, kg2):
    """Read an EASIM file, resolving its surfaces against the two graphs.

    Raises :class:`HeaderError` for a bad magic or inconsistent surface
    tables, :class:`TruncatedPayloadError` when scores are missing,
    :class:`DimensionMismatchError` when there are more scores than the
    declared shape, and :class:`UnresolvedSurfaceError` for unknown entities.
    """
    buf = Path(path).read_bytes()
    if not buf.startswith(EASIM_MAGIC):
        raise HeaderError(f"{path}: bad magic")
    off = len(EASIM_MAGIC)
    if len(buf) < off + 8:
        raise HeaderError(f"{path}: truncated header")
    n_rows, n_cols = struct.unpack_from("<II", buf, off)
    off += 8
    tables = []
    for count in (n_rows, n_cols):
        names = []
        for _ in range(count):
            if off + 4 > len(buf):
                raise HeaderError(f"{path}: surface table shorter than declared {n_rows}x{n_cols}")
            (n,) = struct.unpack_from("<I", buf, off)
            off += 4
            if off + n > len(buf):
                raise HeaderError(f"{path}: surface length {n} runs past end of file")
            try:
                names.append(buf[off:off + n].decode("utf-8"))
            except UnicodeDecodeError:
                raise HeaderError(f"{path}: surface table is not valid UTF-8") from None
            off += n
        tables.append(names)
    expected = n_rows * n_cols * 4
    remaining = len(buf) - off
    if remaining < expected:
        raise TruncatedPayloadError(f"{path}: expected {expected} score bytes, found {remaining}")
    if remaining > expected:
        raise DimensionMismatchError(f"{path}: {remaining - expected} bytes beyond {n_rows}x{n_cols} scores")
    data = np.frombuffer(buf, dtype="<f4", count=n_rows * n_cols, offset=off).reshape(n_rows, n_cols)
    rows = resolve_surfaces(tables[0], kg1.entities, "source")
    cols = resolve_surfaces(tables[1], kg2.entities, "target")
    return SimilarityMatrix(rows, cols, data.astype(np.float32), normalized=False)


def _sidecars(path):
    path = Path(path)
    return path.with_name(path.name + ".rows"), path.with_name(path.name + ".cols")


def write_sparse(m, path, kg1, kg2, **header_fields):
    """Write ``m`` in SIMSP format plus its two sidecar surface files.

    Extra keyword arguments become ``key=value`` tokens in the header.
    """
    r, c, v = m.entries()
    header_fields.setdefault("domain", "frequency" if m.normalized else "raw")
    header = f"{SIMSP_MAGIC} rows={m.shape[0]} cols={m.shape[1]}"
    for k in sorted(header_fields):
        header += f" {k}={header_fields[k]}"
    lines = [header]
    lines += [f"{int(i)}\t{int(j)}\t{float(s)!r}" for i, j, s in zip(r, c, v)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows_path, cols_path = _sidecars(path)
    rows_path.write_text("".join(kg1.entities.surface(int(i)) + "\n" for i in m.rows), encoding="utf-8")
    cols_path.write_text("".join(kg2.entities.surface(int(j)) + "\n" for j in m.cols), encoding="utf-8")


def read_sparse_header(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if not first.startswith(SIMSP_MAGIC):
        raise HeaderError(f"{path}: missing {SIMSP_MAGIC!r} header")
    fields = {}
    for tok in first[len(SIMSP_MAGIC):].split():
        key, sep, value = tok.partition("=")
        if not sep:
            raise HeaderError(f"{path}: bad header token {tok!r}")
        fields[key] = value
    try:
        fields["rows"], fields["cols"] = int(fields["rows"]), int(fields["cols"])
    except (KeyError, ValueError):
        raise HeaderError(f"{path}: header must declare integer rows= and cols=") from None
    return fields


def read_sparse(path, kg1, kg2):
    fields = read_sparse_header(path)
    n_rows, n_cols = fields["rows"], fields["cols"]
    rows_path, cols_path = _sidecars(path)
    row_names = rows_path.read_text(encoding="utf-8").splitlines()
    col_names = cols_path.read_text(encoding="utf-8").splitlines()
    if len(row_names) != n_rows or len(col_names) != n_cols:
        raise DimensionMismatchError(
            f"{path}: header declares {n_rows}x{n_cols}, sidecars list {len(row_names)}x{len(col_names)}")
    ri, ci, vals = [], [], []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise HeaderError(f"{path}:{lineno}: expected row<TAB>col<TAB>score")
            i, j, s = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= i < n_rows and 0 <= j < n_cols):
                raise DimensionMismatchError(f"{path}:{lineno}: cell ({i}, {j}) outside {n_rows}x{n_cols}")
            if (i, j) in seen:
                raise HeaderError(f"{path}:{lineno}: duplicate cell ({i}, {j})")
            seen.add((i, j))
            ri.append(i)
            ci.append(j)
            vals.append(s)
    data = sp.csr_matrix((np.array(vals, dtype=np.float64), (np.array(ri, dtype=np.int64),
                          np.array(ci, dtype=np.int64))), shape=(n_rows, n_cols))
    rows = resolve_surfaces(row_names, kg1.entities, "source")
    cols = resolve_surfaces(col_names, kg2.entities, "target")
    return SimilarityMatrix(rows, cols, data, normalized=fields.get("domain") == "frequency")
