"""Linear soft-margin SVM (L1 hinge loss) with an unregularized intercept.

Minimizes ``0.5*||w||^2 + cost * sum_i max(0, 1 - y_i (w.x_i + b))`` by pairwise
coordinate descent on the dual (SMO with second-order working-set selection,
the weight vector kept explicitly since the kernel is linear). Once per epoch
a projected conjugate-gradient pass over the free variables speeds up the slow
tail SMO shows at large cost. The intercept is then set by exact minimization
of the primal over ``b`` for the final ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Category, DataError, HostId, Prediction, Source

_TAU = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    cost: float = 0.04
    tolerance: float = 1e-4
    max_epochs: int = 1000
    seed: int = 1

    def __post_init__(self):
        if not self.cost > 0:
            raise ValueError("cost must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass(frozen=True)
class SvmModel:
    weights: tuple[float, ...]
    intercept: float

    @property
    def dim(self) -> int:
        return len(self.weights)

    def margin(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DataError(f"expected {self.dim} features, got shape {v.shape}")
        return float(np.dot(self.weights, v) + self.intercept)

    def margins(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DataError(f"expected rows of {self.dim} features")
        return X @ np.asarray(self.weights) + self.intercept

    def dumps(self) -> str:
        return (
            "linsvm/1\n"
            f"dimension\t{self.dim}\n"
            f"intercept\t{self.intercept!r}\n"
            "weights\t" + " ".join(repr(w) for w in self.weights) + "\n"
        )

    @classmethod
    def loads(cls, text: str) -> "SvmModel":
        lines = text.splitlines()
        if len(lines) < 4 or lines[0] != "linsvm/1":
            raise DataError("not a linsvm/1 document")
        dim = int(lines[1].split("\t")[1])
        intercept = float(lines[2].split("\t")[1])
        body = lines[3].split("\t", 1)[1] if "\t" in lines[3] else ""
        weights = tuple(float(w) for w in body.split())
        if len(weights) != dim:
            raise DataError("linsvm/1 weight count does not match dimension")
        return cls(weights, intercept)


def primal_objective(w, b: float, X, y, cost: float) -> float:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    hinge = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return float(0.5 * w @ w + cost * hinge.sum())


def _best_intercept(scores: np.ndarray, y: np.ndarray, hint: float) -> float:
    """argmin_b sum_i max(0, 1 - y_i (s_i + b)); the hint is kept when it is optimal."""
    pos_t = np.sort(1.0 - scores[y > 0])  # y=+1 active while b < t
    neg_u = np.sort(-1.0 - scores[y < 0])  # y=-1 active while b > u
    cand = np.unique(np.concatenate([pos_t, neg_u]))
    pos_cum = np.concatenate([[0.0], np.cumsum(pos_t)])
    neg_cum = np.concatenate([[0.0], np.cumsum(neg_u)])

    def loss(b: np.ndarray) -> np.ndarray:
        k = np.searchsorted(pos_t, b, side="right")  # pos_t[k:] > b
        n_above = len(pos_t) - k
        pos_part = (pos_cum[-1] - pos_cum[k]) - n_above * b
        m = np.searchsorted(neg_u, b, side="left")  # neg_u[:m] < b
        neg_part = m * b - neg_cum[m]
        return pos_part + neg_part

    values = loss(cand)
    best = values.min()
    flat = cand[values <= best + 1e-12 * max(1.0, abs(best))]
    lo, hi = flat.min(), flat.max()
    return float(min(max(hint, lo), hi))


def train_svm(X, y, cfg: SvmConfig = SvmConfig(), trace: Optional[list] = None) -> SvmModel:
    """Fit the soft-margin SVM.

    Parameters
    ----------
    X : array-like (n, d)
    y : array-like of +1/-1
    cfg : SvmConfig
    trace : list, optional
        Receives the dual objective after every epoch (n pair updates).
        The dual objective is non-increasing by construction.

    ``cfg.tolerance`` is the target relative duality gap at termination.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise DataError("labels and rows differ in count")
    if not np.isfinite(X).all():
        raise DataError("non-finite feature value in training data")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise DataError("labels must be -1 or +1")
    if (y > 0).all() or (y < 0).all():
        raise DataError("SVM training needs both classes")

    n, d = X.shape
    C = cfg.cost
    alpha = np.zeros(n)
    w = np.zeros(d)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    diag = np.einsum("ij,ij->i", X, X)
    max_iter = cfg.max_epochs * n

    def dual_objective() -> float:
        return float(0.5 * w @ w - alpha.sum())

    def intercept() -> float:
        # KKT intercept from free vectors (or the violation midpoint), snapped
        # into the exact primal minimizer interval for the current w
        minus_yg = -y * grad
        free = (alpha > 0) & (alpha < C)
        if free.any():
            hint = float(minus_yg[free].mean())
        else:
            up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
            low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
            hi = minus_yg[up].max() if up.any() else 0.0
            lo = minus_yg[low].min() if low.any() else 0.0
            hint = float((hi + lo) / 2.0)
        return _best_intercept(X @ w, y, hint)

    def polish() -> None:
        # Active-set refinement: repeat subspace steps while each one stops on
        # a bound, so the variable that hit the bound leaves the free set.
        for _ in range(n):
            if not subspace_step():
                return

    def subspace_step() -> bool:
        # Projected conjugate gradient on the free variables (bounded ones held
        # fixed, the equality constraint kept by projection). Stops at the first
        # bound, on a flat descent direction, or at the subspace minimum.
        # Returns True when a bound was hit.
        nonlocal w, grad
        free = np.flatnonzero((alpha > 0) & (alpha < C))
        m = free.size
        if m == 0:
            return False
        yf, Xf = y[free], X[free]
        lo, hi = -alpha[free], C - alpha[free]

        def project(v):
            return v - yf * (yf @ v) / m

        def hess(v):
            return project(yf * (Xf @ (Xf.T @ (yf * v))))

        step = np.zeros(m)
        r = -project(yf * (Xf @ w) - 1.0)
        rr = float(r @ r)
        if rr <= 1e-24 * m:
            return False
        p = r.copy()
        flat = 1e-12 * max(1.0, float(diag[free].max()))
        hit = -1
        for _ in range(m + 1):
            hp = hess(p)
            curv = float(p @ hp)
            with np.errstate(divide="ignore", invalid="ignore"):
                room = np.where(p > 0, (hi - step) / p, np.where(p < 0, (lo - step) / p, np.inf))
            k = int(np.argmin(room))
            if curv <= flat * float(p @ p) or rr / curv >= room[k]:
                if not np.isfinite(room[k]):
                    break
                step += room[k] * p
                hit = k
                break
            a = rr / curv
            step += a * p
            r = r - a * hp
            rr_next = float(r @ r)
            if rr_next <= 1e-24 * m:
                break
            p = r + (rr_next / rr) * p
            rr = rr_next

        before = dual_objective()
        saved = alpha[free].copy()
        alpha[free] = np.clip(alpha[free] + step, 0.0, C)
        if hit >= 0:
            alpha[free[hit]] = C if step[hit] > 0 else 0.0
        new_w = X.T @ (alpha * y)
        if 0.5 * new_w @ new_w - alpha.sum() > before:
            alpha[free] = saved  # rounding made things worse; keep the SMO iterate
            return False
        w = new_w
        grad = y * (X @ w) - 1.0
        return hit >= 0

    threshold = cfg.tolerance
    for it in range(max_iter):
        if it % n == 0:
            if it > 0:
                polish()
            if trace is not None:
                trace.append(dual_objective())
        minus_yg = -y * grad
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(minus_yg[up])])
        g_max = minus_yg[i]
        g_min = minus_yg[low].min()
        if g_max - g_min < threshold:
            # the pair violation is small; stop only once the relative duality gap is too
            p = primal_objective(w, intercept(), X, y, C)
            if p + dual_objective() <= cfg.tolerance * max(abs(p), _TAU) or threshold < 1e-15:
                break
            polish()
            threshold /= 10.0
            continue
        k_i = X @ X[i]
        cand = low & (minus_yg < g_max)
        b_it = g_max - minus_yg[cand]
        a_it = diag[i] + diag[cand] - 2.0 * k_i[cand]
        a_it = np.where(a_it > 0, a_it, _TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b_it * b_it) / a_it)])

        old_i, old_j = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * k_i[j]
        if quad <= 0:
            quad = _TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        dw = (alpha[i] - old_i) * y[i] * X[i] + (alpha[j] - old_j) * y[j] * X[j]
        w += dw
        grad += y * (X @ dw)

    if trace is not None:
        trace.append(dual_objective())
    b = intercept()
    return SvmModel(tuple(float(v) for v in w), b)


def _sigmoid_fold(margin: float) -> float:
    return 1.0 / (1.0 + math.exp(-abs(margin)))


def _from_margin(margin: float, host, category) -> Prediction:
    return Prediction(host, category, margin > 0.0, _sigmoid_fold(margin), Source.SVM)


def svm_confidence(
    model: SvmModel,
    v,
    host: Optional[HostId] = None,
    category: Optional[Category] = None,
) -> Prediction:
    """Positive iff the margin is > 0; confidence is the sigmoid folded into [0.5, 1]."""
    return _from_margin(model.margin(v), host, category)


def host_score_from_pages(
    margins: Sequence[float],
    host: Optional[HostId] = None,
    category: Optional[Category] = None,
) -> Prediction:
    """Aggregate page margins to a host decision through their arithmetic mean."""
    if len(margins) == 0:
        raise DataError("host has no page margins")
    return _from_margin(float(np.mean(margins)), host, category)
