"""Keyword vector tables: loading, writing and PCA reduction.

File format (text, one keyword per line)::

    dim=<d> count=<n>
    keyword<TAB>f1 f2 ... fd

Values are written with ``repr`` so a write/read cycle is bit-exact.
"""
from __future__ import annotations

import logging
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"^dim=(\d+)\s+count=(\d+)\s*$")


class VectorFileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VectorTable:
    """Ordered mapping keyword -> row of ``matrix``."""

    keywords: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            m = m.reshape(len(self.keywords), -1)
        if m.shape[0] != len(self.keywords):
            raise ValueError("row count differs from keyword count")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "keywords", tuple(self.keywords))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.keywords)

    def __getitem__(self, keyword: str) -> np.ndarray:
        return self.matrix[self.index[keyword]]

    @property
    def index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.keywords)}


class EmbeddingTable(VectorTable):
    pass


class ReducedTable(VectorTable):
    pass


def _read_vectors(path, expected_dim=None):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        return (), np.zeros((0, expected_dim or 0))
    m = _HEADER.match(lines[0])
    if not m:
        raise VectorFileError(f"{path}: bad header {lines[0]!r}")
    dim, count = int(m.group(1)), int(m.group(2))
    if expected_dim is not None and dim != expected_dim:
        raise VectorFileError(f"{path}: dimension {dim} != configured {expected_dim}")
    rows: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            kw, values = line.split("\t", 1)
        except ValueError:
            raise VectorFileError(f"{path}:{lineno}: missing tab separator") from None
        vec = np.array(values.split(), dtype=float)
        if len(vec) != dim:
            raise VectorFileError(f"{path}:{lineno}: keyword {kw!r} has dimension {len(vec)}, expected {dim}")
        if not np.all(np.isfinite(vec)):
            raise VectorFileError(f"{path}:{lineno}: keyword {kw!r} has a NaN/Inf component")
        if kw in rows:
            warnings.warn(f"{path}: duplicate keyword {kw!r}; keeping the last row", stacklevel=3)
            del rows[kw]
        rows[kw] = vec
    if len(rows) != count:
        logger.warning("%s: header count %d but %d unique rows", path, count, len(rows))
    keys = tuple(rows)
    mat = np.vstack(list(rows.values())) if rows else np.zeros((0, dim))
    return keys, mat


def load_embeddings(path: str | Path) -> EmbeddingTable:
    keys, mat = _read_vectors(path)
    logger.info("loaded %d embeddings of dimension %d from %s", len(keys), mat.shape[1], path)
    return EmbeddingTable(keys, mat)


def load_reduced(path: str | Path, n_components: int) -> ReducedTable:
    """Load externally reduced vectors (e.g. UMAP output), checking the dimension."""
    keys, mat = _read_vectors(path, expected_dim=n_components)
    return ReducedTable(keys, mat)


def write_vectors(table: VectorTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={table.dim} count={len(table)}\n")
        for kw, row in zip(table.keywords, table.matrix):
            if "\t" in kw or "\n" in kw:
                raise VectorFileError(f"keyword {kw!r} contains a tab or newline")
            fh.write(kw + "\t" + " ".join(repr(float(v)) for v in row) + "\n")


def pca_reduce(table: VectorTable, n_components: int) -> ReducedTable:
    """Project rows onto the top principal components of the centred data.

    Components are ordered by decreasing eigenvalue, and each component's sign
    is fixed so that its largest-magnitude loading is positive.
    """
    X = table.matrix
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 1 <= n_components <= d:
        raise ValueError(f"n_components={n_components} outside 1..{d}")
    centred = X - X.mean(axis=0)
    cov = centred.T @ centred / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    comps = evecs[:, order]
    pivot = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[pivot, np.arange(n_components)])
    signs[signs == 0] = 1.0
    comps = comps * signs
    return ReducedTable(table.keywords, centred @ comps)

