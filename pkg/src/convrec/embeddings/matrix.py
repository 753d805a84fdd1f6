"""Item embedding matrix and its textual persistence format.

File layout: first line `<n_items> <dim>`, then one `item_id v1 ... vd`
line per item in row order. Values are written with repr() so a
save/load round trip is bit-exact for float64.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataError


class EmbeddingMatrix:
    """|V| x d real matrix with rows aligned to an ordered item-id list."""

    def __init__(self, item_ids: list[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DataError(f"embedding matrix must be 2-d, got shape {vectors.shape}")
        if len(item_ids) != vectors.shape[0]:
            raise DataError(
                f"{len(item_ids)} item ids but {vectors.shape[0]} embedding rows"
            )
        if vectors.shape[1] < 1:
            raise DataError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            raise DataError("embedding matrix contains non-finite values")
        if len(set(item_ids)) != len(item_ids):
            raise DataError("duplicate item ids in embedding matrix")
        self.item_ids = list(item_ids)
        self.vectors = vectors
        self.index = {item_id: i for i, item_id in enumerate(self.item_ids)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.item_ids)

    def row(self, item_id: str) -> np.ndarray:
        try:
            return self.vectors[self.index[item_id]]
        except KeyError:
            raise DataError(f"unknown item id {item_id!r}") from None

    def rows(self, item_ids: list[str]) -> np.ndarray:
        return self.vectors[[self.index[i] for i in item_ids]]


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(matrix)} {matrix.dim}\n")
        for item_id, row in zip(matrix.item_ids, matrix.vectors):
            values = " ".join(repr(float(v)) for v in row)
            fh.write(f"{item_id} {values}\n")


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    if not path.exists():
        raise DataError(f"embedding file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}:1: malformed header, expected '<n_items> <dim>'")
        try:
            n_items, dim = int(header[0]), int(header[1])
        except ValueError:
            raise DataError(f"{path}:1: malformed header, expected '<n_items> <dim>'") from None
        if n_items == 0:
            raise DataError(f"{path}: empty embedding file")
        if dim < 1:
            raise DataError(f"{path}:1: dimension must be >= 1")

        item_ids: list[str] = []
        vectors = np.empty((n_items, dim), dtype=np.float64)
        for i in range(n_items):
            lineno = i + 2
            line = fh.readline()
            if not line:
                raise DataError(f"{path}: header promised {n_items} rows, file has {i}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}"
                )
            item_ids.append(parts[0])
            try:
                vectors[i] = [float(v) for v in parts[1:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable embedding value") from None
        if fh.readline().strip():
            raise DataError(f"{path}: trailing data after {n_items} rows")
    return EmbeddingMatrix(item_ids, vectors)
