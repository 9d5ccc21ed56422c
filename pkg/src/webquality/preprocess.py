"""Min-max normalization and SMOTE oversampling.

Random draws come from numpy's PCG64 bit generator, whose output stream for a
given seed is fixed across platforms and numpy releases, so ``seed=1`` gives
the same synthetic samples everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DataError


@dataclass(frozen=True)
class NormalizationModel:
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins and maxs differ in length")
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("min exceeds max")

    @property
    def dim(self) -> int:
        return len(self.mins)

    def dumps(self) -> str:
        lines = ["minmax/1", f"dimension\t{self.dim}"]
        lines += [f"{lo!r}\t{hi!r}" for lo, hi in zip(self.mins, self.maxs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "NormalizationModel":
        lines = text.splitlines()
        if not lines or lines[0] != "minmax/1":
            raise DataError("not a minmax/1 document")
        dim = int(lines[1].split("\t")[1])
        pairs = [tuple(float(x) for x in ln.split("\t")) for ln in lines[2 : 2 + dim]]
        if len(pairs) != dim:
            raise DataError("truncated minmax/1 document")
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def _as_matrix(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        if rows.ndim != 2:
            raise DataError("expected a 2-D array of rows")
        return rows.astype(float, copy=False)
    rows = list(rows)
    if not rows:
        return np.empty((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DataError("rows have differing dimensions")
    return np.asarray(rows, dtype=float).reshape(len(rows), width)


def fit_normalizer(rows) -> NormalizationModel:
    X = _as_matrix(rows)
    if X.shape[0] == 0:
        raise DataError("cannot fit a normalizer on zero rows")
    return NormalizationModel(tuple(X.min(axis=0).tolist()), tuple(X.max(axis=0).tolist()))


def apply_normalizer(model: NormalizationModel, v) -> np.ndarray:
    """Scale a vector (or a matrix of rows) into [0, 1].

    Constant features map to 0.0; values outside the fitted range are clamped.
    """
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1] != model.dim:
        raise DataError(f"expected dimension {model.dim}, got {arr.shape[-1]}")
    lo = np.asarray(model.mins)
    hi = np.asarray(model.maxs)
    span = hi - lo
    constant = span <= 0
    safe = np.where(constant, 1.0, span)
    out = (arr - lo) / safe
    out = np.where(constant, 0.0, out)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    percentage: int = 100
    seed: int = 1

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.percentage < 0 or self.percentage % 100:
            raise ValueError("percentage must be a non-negative multiple of 100")


def smote_oversample(minority: Sequence[Sequence[float]], cfg: SmoteConfig = SmoteConfig()) -> np.ndarray:
    """Synthesize ``percentage/100`` new samples per minority sample.

    Each synthetic point is ``x + u * (n - x)`` for a minority sample ``x``,
    one of its k nearest minority neighbours ``n`` and ``u`` uniform in [0, 1).
    Minority samples are visited in input order.
    """
    X = _as_matrix(minority)
    m = X.shape[0]
    if m < 2:
        raise DataError("SMOTE needs at least two minority samples")
    k = min(cfg.k_neighbors, m - 1)
    per_sample = cfg.percentage // 100
    out = np.empty((m * per_sample, X.shape[1]))
    if per_sample == 0:
        return out
    neighbors = nearest_neighbors(X, k)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    row = 0
    for i in range(m):
        for _ in range(per_sample):
            nn = neighbors[i, int(rng.integers(k))]
            u = rng.random()
            out[row] = X[i] + u * (X[nn] - X[i])
            row += 1
    return out


def nearest_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other rows (Euclidean), closest first, ties by index."""
    m = X.shape[0]
    idx = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        d2 = ((X - X[i]) ** 2).sum(axis=1)
        d2[i] = np.inf
        idx[i] = np.argsort(d2, kind="stable")[:k]
    return idx
