"""Local polynomial estimation with explicit equivalent-kernel weights.

A degree-l fit at a query point x0 solves a kernel-weighted least squares
problem in the rescaled coordinate u = (x - x0)/h; the estimator is linear in
the responses, y_hat(x0) = sum_k W_k(x0) y_k, and the weight vector is exposed
so weight-level invariants (sum to one, zero outside the window, 1/(nh) decay)
can be checked directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline import Dataset
from .kernels import EPANECHNIKOV, Kernel

# Local Gram matrices with smallest eigenvalue below this are treated as
# degenerate and ridged.
DEGENERATE_EIG = 1e-10


class NoLocalSupport(Exception):
    """No design point carries positive kernel weight at the query point."""


@dataclass(frozen=True)
class LpeConfig:
    """Order, bandwidth, kernel and ridge scale of a local polynomial fit."""

    order: int
    bandwidth: float
    kernel: Kernel = EPANECHNIKOV
    ridge: float = 1e-8

    def __post_init__(self):
        if not 0 <= self.order <= 5:
            raise ValueError(f"order must be in 0..5, got {self.order}")
        if not 0.0 < self.bandwidth <= 1.0:
            raise ValueError(f"bandwidth must be in (0, 1], got {self.bandwidth}")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


@dataclass
class WeightVector:
    """Equivalent-kernel weights W_k(x0) of a local fit, one per design point."""

    weights: np.ndarray
    query: float
    degenerate: bool


def _local_weights(config: LpeConfig, xs: np.ndarray, x0: float,
                   candidates: np.ndarray | None = None):
    """Solve the local system; returns (kept indices, their weights, degenerate).

    `candidates` restricts the computation to a superset of the support
    window (ascending indices); results are bit-identical to the full scan
    because the kept index set and all elementwise arithmetic coincide.
    """
    if candidates is None:
        sub = xs
        u = (sub - x0) / config.bandwidth
        k = config.kernel(u)
        keep = k > 0.0
        idx = np.nonzero(keep)[0]
    else:
        sub = xs[candidates]
        u = (sub - x0) / config.bandwidth
        k = config.kernel(u)
        keep = k > 0.0
        idx = candidates[keep]
    if idx.size == 0:
        raise NoLocalSupport(f"no kernel support at x0={x0} with h={config.bandwidth}")
    ul = u[keep]
    kl = k[keep]

    p = config.order + 1
    basis = np.vander(ul, N=p, increasing=True)
    gram = (basis * kl[:, None]).T @ basis
    degenerate = False
    if np.linalg.eigvalsh(gram)[0] < DEGENERATE_EIG:
        gram = gram + (config.ridge * np.trace(gram) / p) * np.eye(p)
        degenerate = True
    rhs = np.zeros(p)
    rhs[0] = 1.0
    coef = np.linalg.solve(gram, rhs)
    return idx, (basis @ coef) * kl, degenerate


def equivalent_kernel_weights(config: LpeConfig, xs, x0: float) -> WeightVector:
    """Weight vector of the LP(order) fit at x0 over the design xs.

    Raises NoLocalSupport when no point has positive kernel weight. When the
    local Gram matrix is near-singular the configured ridge is added and the
    result is flagged degenerate (its weights need not sum to one).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise NoLocalSupport("empty design")
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("query point outside [0, 1]")
    idx, local, degenerate = _local_weights(config, xs, x0)
    weights = np.zeros(xs.size)
    weights[idx] = local
    return WeightVector(weights=weights, query=x0, degenerate=degenerate)


def fit_predict(config: LpeConfig, data: Dataset, x0: float) -> float:
    """Local polynomial prediction at x0: dot of the weights with ys."""
    xs = data.xs
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("query point outside [0, 1]")
    idx, local, _ = _local_weights(config, xs, x0)
    return float(local @ data.ys[idx])


def predict_grid(config: LpeConfig, data: Dataset, grid) -> np.ndarray:
    """Vectorized fit_predict over query points.

    Query points without local support yield NaN, never a silent zero. Uses a
    sorted-window scan but produces bit-identical values to the scalar path.
    """
    grid = np.asarray(grid, dtype=float)
    flat = grid.ravel()
    vals = np.full(flat.size, np.nan)
    if flat.size == 0:
        return vals.reshape(grid.shape)
    if flat.min() < 0.0 or flat.max() > 1.0:
        raise ValueError("query points outside [0, 1]")
    xs = data.xs
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    h = config.bandwidth
    for i, g in enumerate(flat):
        lo = np.searchsorted(xs_sorted, g - h, side="left")
        hi = np.searchsorted(xs_sorted, g + h, side="right")
        cand = np.sort(order[lo:hi])
        try:
            idx, local, _ = _local_weights(config, xs, g, candidates=cand)
        except NoLocalSupport:
            continue
        vals[i] = local @ data.ys[idx]
    return vals.reshape(grid.shape)
