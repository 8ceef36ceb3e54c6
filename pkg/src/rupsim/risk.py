"""Monte Carlo risk decomposition for local polynomial fits under perturbation.

The pointwise risk splits, by the law of total variance over the perturbation
draw, into squared bias, sampling variance (inner, data given a realization)
and distributional variance (outer, across realizations). The nested
estimator subtracts the inner-noise contamination from the outer variance so
the three pieces add up to the total mean squared error within Monte Carlo
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bandwidth import argmin_prefer_larger
from .baseline import BaselineConfig
from .local_poly import LpeConfig, NoLocalSupport, equivalent_kernel_weights, fit_predict, predict_grid
from .perturbation import (CorrelatedNoiseSpec, PerturbationSpec, bucket_of,
                           draw_perturbation, sample_perturbed)
from .streams import map_indexed, substream

# Abort when more than this fraction of fits lack local support.
MAX_FAIL_FRACTION = 0.01


@dataclass
class RiskReport:
    """Pointwise risk decomposition with Monte Carlo standard errors.

    Variance components are clamped at zero for reporting; raw values stay in
    diagnostics so the additivity check is not distorted. se_combined is the
    root-sum-square of the four component standard errors and is the scale
    against which the additivity residual is judged.
    """

    bias2: float
    sampling_var: float
    dist_var: float
    total_mse: float
    se_total: float
    se_bias2: float
    se_sampling: float
    se_dist: float
    se_combined: float
    reps_xi: int
    reps_data: int
    x0: float
    diagnostics: dict

    @property
    def identity_residual(self) -> float:
        return self.total_mse - (self.bias2 + self.sampling_var +
                                 self.diagnostics["dist_var_raw"])

    CSV_HEADER = ("x0", "n_reps_xi", "n_reps_data", "bias2", "sampling_var",
                  "dist_var", "total_mse", "se_total")

    def csv_row(self) -> tuple:
        return (self.x0, self.reps_xi, self.reps_data, self.bias2,
                self.sampling_var, self.dist_var, self.total_mse, self.se_total)


def _risk_components(mu, v, v_over_b, t, f0):
    grand = mu.mean()
    bias2 = (grand - f0) ** 2
    samp = v.mean()
    dist_raw = np.var(mu, ddof=1) - v_over_b.mean()
    total = t.mean()
    return np.array([bias2, samp, dist_raw, total])


def _jackknife_se(mu, v, v_over_b, t, f0) -> np.ndarray:
    a = mu.size
    stats = np.empty((a, 4))
    mask = np.ones(a, dtype=bool)
    for i in range(a):
        mask[i] = False
        stats[i] = _risk_components(mu[mask], v[mask], v_over_b[mask], t[mask], f0)
        mask[i] = True
    center = stats.mean(axis=0)
    return np.sqrt((a - 1) / a * ((stats - center) ** 2).sum(axis=0))


def pointwise_risk_mc(base: BaselineConfig, spec: PerturbationSpec, lpe: LpeConfig,
                      x0: float, reps_xi: int, reps_data: int, seed: int,
                      threads: int = 1) -> RiskReport:
    """Nested Monte Carlo estimate of the pointwise risk decomposition at x0.

    Outer loop draws perturbation realizations, inner loop draws datasets
    conditional on each realization; every replicate has a pre-assigned
    stream, so the report is identical for any thread count. Aborts if more
    than 1% of fits fail with NoLocalSupport.
    """
    if reps_xi < 2 or reps_data < 2:
        raise ValueError("need reps_xi >= 2 and reps_data >= 2")
    f0 = float(base.f(x0))

    def one_realization(i: int):
        xi = draw_perturbation(spec, substream(seed, "xi", i), realization_id=f"xi{i:05d}")
        ests = np.empty(reps_data)
        for j in range(reps_data):
            ds = sample_perturbed(spec, xi, base.n, substream(seed, "data", i, j))
            try:
                ests[j] = fit_predict(lpe, ds, x0)
            except NoLocalSupport:
                ests[j] = np.nan
        return ests

    rows = np.array(map_indexed(one_realization, reps_xi, threads))
    valid = ~np.isnan(rows)
    failed = int((~valid).sum())
    if failed > MAX_FAIL_FRACTION * rows.size:
        raise RuntimeError(
            f"{failed}/{rows.size} fits lacked local support at x0={x0} "
            f"(h={lpe.bandwidth}); bandwidth too small for n={base.n}")
    counts = valid.sum(axis=1)
    usable = counts >= 2
    dropped_rows = int((~usable).sum())
    if usable.sum() < 2:
        raise RuntimeError("fewer than 2 usable outer replicates")
    sub = rows[usable]
    mu = np.nanmean(sub, axis=1)
    v = np.nanvar(sub, axis=1, ddof=1)
    v_over_b = v / counts[usable]
    t = np.nanmean((sub - f0) ** 2, axis=1)

    bias2, samp, dist_raw, total = _risk_components(mu, v, v_over_b, t, f0)
    se_bias2, se_samp, se_dist, se_total = _jackknife_se(mu, v, v_over_b, t, f0)
    se_combined = math.sqrt(se_bias2 ** 2 + se_samp ** 2 + se_dist ** 2 + se_total ** 2)
    return RiskReport(
        bias2=float(bias2), sampling_var=float(samp), dist_var=float(max(0.0, dist_raw)),
        total_mse=float(total), se_total=float(se_total), se_bias2=float(se_bias2),
        se_sampling=float(se_samp), se_dist=float(se_dist), se_combined=float(se_combined),
        reps_xi=reps_xi, reps_data=reps_data, x0=x0,
        diagnostics={"dist_var_raw": float(dist_raw), "failed_fits": failed,
                     "total_fits": rows.size, "dropped_rows": dropped_rows})


def dist_var_weight_oracle(base: BaselineConfig, spec: CorrelatedNoiseSpec,
                           lpe: LpeConfig, x0: float, reps: int, seed: int) -> tuple[float, float]:
    """Brute-force weight-resampling value of the distributional variance.

    Averages sum_b (sum of in-bucket weights)^2 over fresh uniform designs
    and scales by delta2*sigma2 (the block correlation makes the double sum
    over weight pairs collapse to per-bucket squares). Returns (value, se).
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    acc = np.empty(reps)
    for r in range(reps):
        xs = substream(seed, "oracle-design", r).random(base.n)
        w = equivalent_kernel_weights(lpe, xs, x0).weights
        s = np.bincount(bucket_of(xs, spec.b_x), weights=w, minlength=spec.b_x)
        acc[r] = (s ** 2).sum()
    scale = spec.delta2 * base.sigma2
    return (float(scale * acc.mean()),
            float(scale * acc.std(ddof=1) / math.sqrt(reps)))


@dataclass
class MiseCurve:
    """MISE against bandwidth, with the meta block echoing the run setup."""

    h: np.ndarray
    mise: np.ndarray
    se: np.ndarray
    argmin_h: float
    meta: dict

    @property
    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.h.tolist(), self.mise.tolist(), self.se.tolist()))


def mise_mc(base: BaselineConfig, spec: PerturbationSpec, lpe_base: LpeConfig,
            h_grid, eval_grid, reps: int, seed: int, threads: int = 1) -> MiseCurve:
    """Mean integrated squared error across perturbation realizations.

    Each replicate draws a fresh (realization, dataset) pair; the same
    replicate data are reused across the whole h grid (common random
    numbers), so curves for different h, and for different strengths run
    under the same seed, are variance-coupled. Any NoLocalSupport at a grid
    point invalidates that h (+inf), it is never scored as zero.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    h_grid = np.sort(np.asarray(h_grid, dtype=float))
    eval_grid = np.asarray(eval_grid, dtype=float)
    if h_grid.size == 0 or eval_grid.size == 0:
        raise ValueError("h_grid and eval_grid must be nonempty")
    truth = base.f(eval_grid)

    def one_rep(r: int) -> np.ndarray:
        xi = draw_perturbation(spec, substream(seed, "xi", r), realization_id=f"xi{r:05d}")
        ds = sample_perturbed(spec, xi, base.n, substream(seed, "data", r))
        out = np.empty(h_grid.size)
        for i, h in enumerate(h_grid):
            cfg = replace(lpe_base, bandwidth=float(h))
            preds = predict_grid(cfg, ds, eval_grid)
            err = preds - truth
            out[i] = np.mean(err ** 2)  # NaN if any grid point lacked support
        return out

    table = np.array(map_indexed(one_rep, reps, threads))  # (reps, n_h)
    bad = np.isnan(table).any(axis=0)
    mise = table.mean(axis=0)
    se = table.std(axis=0, ddof=1) / math.sqrt(reps)
    mise[bad] = np.inf
    se[bad] = np.nan
    argmin_h = argmin_prefer_larger(h_grid, mise)
    meta = {"n": base.n, "sigma2": base.sigma2, "f": base.f.name, "reps": reps,
            "seed": seed, "order": lpe_base.order, "kernel": lpe_base.kernel.name,
            "failed_h": h_grid[bad].tolist()}
    return MiseCurve(h=h_grid, mise=mise, se=se, argmin_h=argmin_h, meta=meta)


def optimal_bandwidth_curve(base: BaselineConfig, lpe_base: LpeConfig, b_x: int,
                            tau_grid, n_grid, h_grid, eval_grid, reps: int,
                            seed: int, threads: int = 1) -> list[dict]:
    """Empirical optimal bandwidth per (n, tau) cell.

    Cells are generated from the correlated noise model with delta2 =
    tau*b_x, all under the same seed so curves across n and tau are coupled.
    Returns rows {n, tau, h_star}.
    """
    rows = []
    for tau in np.asarray(tau_grid, dtype=float):
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        for n in np.asarray(n_grid, dtype=np.int64):
            cell_base = replace(base, n=int(n))
            spec = CorrelatedNoiseSpec(b_x=b_x, delta2=float(tau) * b_x, baseline=cell_base)
            curve = mise_mc(cell_base, spec, lpe_base, h_grid, eval_grid, reps, seed, threads)
            rows.append({"n": int(n), "tau": float(tau), "h_star": curve.argmin_h})
    return rows


def rate_fit(xs, ys) -> tuple[float, float, float]:
    """OLS line through (xs, ys); returns (slope, intercept, r_squared)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("need at least 3 points")
    if np.ptp(xs) == 0.0:
        raise ValueError("degenerate fit: all x values equal")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return float(slope), float(intercept), r2
