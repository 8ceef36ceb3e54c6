"""Dataset-level perturbation generators for the conditional law Y|X.

Two mechanisms are implemented. The partition model tilts the joint density
of (X, noise) multiplicatively over a grid of quantile cells, with iid
positive weights row-normalized so the X marginal is untouched. The
correlated noise model adds an iid Gaussian mean shift to the noise within
each X bucket. Both keep the covariate marginal fixed, are mean-zero across
realizations, and carry a strength tau = delta2 * rho_bar where rho_bar is
the average within-bucket correlation 1/B_X.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .baseline import BaselineConfig, Dataset, get_function

_MAX_REDRAWS = 100
_TINY = np.finfo(float).tiny


def bucket_of(xs, b_x: int) -> np.ndarray:
    """Equal-width bucket index on [0,1]; x = 1.0 folds into the last bucket."""
    xs = np.asarray(xs, dtype=float)
    return np.minimum((xs * b_x).astype(np.int64), b_x - 1)


@dataclass(frozen=True)
class WeightLaw:
    """Positive iid weight law for the partition model.

    The catalog is restricted to laws compatible with the row-normalized
    Taylor expansion behind the leading-order variance scale (all inverse
    moments of the lognormal are finite; the exponential is admitted through
    the row-mean moment). var_over_mean_sq is Var(xi)/E[xi]^2.
    """

    kind: str
    log_mean: float = 0.0
    log_sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exp", "lognormal"):
            raise ValueError(f"unknown weight law {self.kind!r}")
        if self.kind == "lognormal" and self.log_sd <= 0:
            raise ValueError("lognormal log_sd must be positive")

    @classmethod
    def exponential(cls) -> "WeightLaw":
        return cls("exp")

    @classmethod
    def lognormal_with_ratio(cls, var_over_mean_sq: float) -> "WeightLaw":
        """Lognormal with a target Var/mean^2 = exp(s^2) - 1."""
        if var_over_mean_sq <= 0:
            raise ValueError("var_over_mean_sq must be positive")
        return cls("lognormal", log_mean=0.0, log_sd=math.sqrt(math.log1p(var_over_mean_sq)))

    @property
    def var_over_mean_sq(self) -> float:
        if self.kind == "exp":
            return 1.0
        return math.expm1(self.log_sd ** 2)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "exp":
            return rng.exponential(1.0, size)
        return rng.lognormal(self.log_mean, self.log_sd, size)


@dataclass(frozen=True)
class PartitionSpec:
    """Quantile-cell reweighting over B_X x B_eps cells of (X, noise)."""

    b_x: int
    b_eps: int
    weight_law: WeightLaw
    baseline: BaselineConfig

    def __post_init__(self):
        if self.b_x < 1:
            raise ValueError("b_x must be at least 1")
        if self.b_eps < 2:
            raise ValueError("b_eps must be at least 2")
        if self.baseline.sigma2 <= 0:
            raise ValueError("partition model needs sigma2 > 0 (noise quantile bins)")


@dataclass(frozen=True)
class CorrelatedNoiseSpec:
    """Additive Gaussian mean shift per X bucket, xi_b ~ N(0, delta2*sigma2)."""

    b_x: int
    delta2: float
    baseline: BaselineConfig

    def __post_init__(self):
        if self.b_x < 1:
            raise ValueError("b_x must be at least 1")
        if self.delta2 < 0:
            raise ValueError("delta2 must be nonnegative")

    @property
    def corr_length(self) -> float:
        """Bucket width: shifts at points farther apart are uncorrelated."""
        return 1.0 / self.b_x


PerturbationSpec = Union[PartitionSpec, CorrelatedNoiseSpec]


@dataclass(frozen=True)
class PerturbationStrength:
    """Strength summary tau = delta2 * rho_bar of a perturbation spec."""

    tau: float
    delta2: float
    rho_bar: float
    corr_length: float
    leading_order: bool


@dataclass
class PerturbationRealization:
    """One drawn perturbation, enough to replay conditional sampling."""

    variant: str  # "partition" | "correlated_noise"
    spec: PerturbationSpec
    realization_id: str | None = None
    partition_weights: np.ndarray | None = None  # raw (B_X, B_eps)
    row_normalizers: np.ndarray | None = None    # per-row mean weight
    eps_bin_means: np.ndarray | None = None      # E[eps | eps in bin j]
    bucket_shifts: np.ndarray | None = None      # (B_X,)

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.partition_weights / self.row_normalizers[:, None]


def gaussian_bin_means(sigma2: float, b_eps: int) -> np.ndarray:
    """Exact means of N(0, sigma2) truncated to its b_eps quantile bins."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    edges = stats.norm.ppf(np.arange(b_eps + 1) / b_eps)
    pdf = np.exp(-0.5 * edges ** 2) / math.sqrt(2.0 * math.pi)
    pdf[0] = 0.0
    pdf[-1] = 0.0
    # truncated-normal mean on a slice of probability 1/b_eps
    return math.sqrt(sigma2) * b_eps * (pdf[:-1] - pdf[1:])


def draw_perturbation(spec: PerturbationSpec, rng: np.random.Generator,
                      realization_id: str | None = None) -> PerturbationRealization:
    """Draw one perturbation realization xi from the spec's law."""
    if isinstance(spec, CorrelatedNoiseSpec):
        scale = math.sqrt(spec.delta2 * spec.baseline.sigma2)
        shifts = rng.normal(0.0, scale, spec.b_x)
        return PerturbationRealization(variant="correlated_noise", spec=spec,
                                       realization_id=realization_id,
                                       bucket_shifts=shifts)
    weights = spec.weight_law.sample(rng, (spec.b_x, spec.b_eps))
    bad = weights <= 0.0
    redraws = 0
    while bad.any():
        redraws += 1
        if redraws > _MAX_REDRAWS:
            raise RuntimeError(
                f"weight draw degenerate after {_MAX_REDRAWS} redraws "
                f"({int(bad.sum())} stuck cells); check the weight law")
        weights[bad] = spec.weight_law.sample(rng, int(bad.sum()))
        bad = weights <= 0.0
    return PerturbationRealization(
        variant="partition", spec=spec, realization_id=realization_id,
        partition_weights=weights,
        row_normalizers=weights.mean(axis=1),
        eps_bin_means=gaussian_bin_means(spec.baseline.sigma2, spec.b_eps))


def sample_perturbed(spec: PerturbationSpec, xi: PerturbationRealization, n: int,
                     rng: np.random.Generator, xs: np.ndarray | None = None) -> Dataset:
    """Draw n iid pairs from the perturbed law P_xi.

    X stays uniform (forced via xs for tests); the noise law is shifted
    (correlated noise) or bin-tilted (partition) according to xi.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if xi.spec is not spec and xi.spec != spec:
        raise ValueError("realization was drawn from a different spec")
    if xs is None:
        xs = rng.random(n)
    else:
        xs = np.asarray(xs, dtype=float)
        if xs.size != n:
            raise ValueError("forced xs must have length n")
    base = spec.baseline
    buckets = bucket_of(xs, spec.b_x)

    if isinstance(spec, CorrelatedNoiseSpec):
        eps = rng.normal(0.0, math.sqrt(base.sigma2), n)
        ys = base.f(xs) + xi.bucket_shifts[buckets] + eps
        return Dataset(xs=xs, ys=ys, bucket_ids=buckets,
                       realization_id=xi.realization_id)

    # Partition: pick a noise bin from the tilted row law, then sample the
    # Gaussian restricted to that bin by inverse CDF on its probability slice.
    b_eps = spec.b_eps
    row_cum = np.cumsum(xi.normalized_weights / b_eps, axis=1)
    u_bin = rng.random(n)
    bins = np.empty(n, dtype=np.int64)
    for b in np.unique(buckets):
        mask = buckets == b
        bins[mask] = np.searchsorted(row_cum[b], u_bin[mask], side="right")
    np.clip(bins, 0, b_eps - 1, out=bins)
    u_pos = rng.random(n)
    slice_prob = np.clip((bins + u_pos) / b_eps, _TINY, 1.0 - np.finfo(float).epsneg)
    eps = math.sqrt(base.sigma2) * stats.norm.ppf(slice_prob)
    ys = base.f(xs) + eps
    return Dataset(xs=xs, ys=ys, bucket_ids=buckets, realization_id=xi.realization_id)


def delta_at(xi: PerturbationRealization, x) -> np.ndarray:
    """Conditional-mean shift Delta_xi(x) of the noise at covariate x.

    Correlated noise: the bucket shift itself. Partition: the bin-mean
    contrast (1/B_eps) * sum_j (w_ij/w_bar_i - 1) m_j of the bucket's row.
    """
    x = np.asarray(x, dtype=float)
    spec = xi.spec
    buckets = bucket_of(x, spec.b_x)
    if xi.variant == "correlated_noise":
        return xi.bucket_shifts[buckets]
    row_delta = (xi.normalized_weights - 1.0) @ xi.eps_bin_means / spec.b_eps
    return row_delta[buckets]


def perturbation_strength(spec: PerturbationSpec) -> PerturbationStrength:
    """Strength parameters of the spec; leading order in B_eps for partition."""
    rho_bar = 1.0 / spec.b_x
    if isinstance(spec, CorrelatedNoiseSpec):
        delta2 = spec.delta2
        leading = False
    else:
        delta2 = spec.weight_law.var_over_mean_sq / spec.b_eps
        leading = True
    return PerturbationStrength(tau=delta2 * rho_bar, delta2=delta2, rho_bar=rho_bar,
                                corr_length=1.0 / spec.b_x, leading_order=leading)


def kl_to_baseline_partition(xi: PerturbationRealization) -> float:
    """KL(P0 || P_xi) of a partition realization: mean of -log normalized weight."""
    if xi.variant != "partition":
        raise ValueError("KL-to-baseline formula applies to partition realizations only")
    return float(np.mean(-np.log(xi.normalized_weights)))


def delta_variance_mc(spec: PerturbationSpec, reps: int, rng: np.random.Generator,
                      x: float = 0.5) -> float:
    """Monte Carlo estimate of Var over realizations of Delta_xi(x).

    Exact-delta2 companion to the leading-order value reported by
    perturbation_strength for the partition model.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    deltas = np.empty(reps)
    for r in range(reps):
        deltas[r] = delta_at(draw_perturbation(spec, rng), x)
    return float(np.var(deltas, ddof=1))


def realization_to_json(xi: PerturbationRealization) -> dict:
    """JSON-serializable replay document for a realization."""
    spec = xi.spec
    base = spec.baseline
    doc: dict = {
        "variant": xi.variant,
        "realization_id": xi.realization_id,
        "spec": {
            "b_x": spec.b_x,
            "baseline": {"f": base.f.name, "sigma2": base.sigma2, "n": base.n},
        },
    }
    if xi.variant == "partition":
        doc["spec"]["b_eps"] = spec.b_eps
        doc["spec"]["weight_law"] = {"kind": spec.weight_law.kind,
                                     "log_mean": spec.weight_law.log_mean,
                                     "log_sd": spec.weight_law.log_sd}
        doc["partition_weights"] = xi.partition_weights.tolist()
    else:
        doc["spec"]["delta2"] = spec.delta2
        doc["bucket_shifts"] = xi.bucket_shifts.tolist()
    return doc


def realization_from_json(doc: dict) -> PerturbationRealization:
    """Rebuild a realization from its replay document."""
    sp = doc["spec"]
    base = BaselineConfig(f=get_function(sp["baseline"]["f"]),
                          sigma2=float(sp["baseline"]["sigma2"]),
                          n=int(sp["baseline"]["n"]))
    if doc["variant"] == "partition":
        law = WeightLaw(kind=sp["weight_law"]["kind"],
                        log_mean=float(sp["weight_law"]["log_mean"]),
                        log_sd=float(sp["weight_law"]["log_sd"]))
        spec = PartitionSpec(b_x=int(sp["b_x"]), b_eps=int(sp["b_eps"]),
                             weight_law=law, baseline=base)
        weights = np.asarray(doc["partition_weights"], dtype=float)
        return PerturbationRealization(
            variant="partition", spec=spec, realization_id=doc.get("realization_id"),
            partition_weights=weights, row_normalizers=weights.mean(axis=1),
            eps_bin_means=gaussian_bin_means(base.sigma2, spec.b_eps))
    spec = CorrelatedNoiseSpec(b_x=int(sp["b_x"]), delta2=float(sp["delta2"]), baseline=base)
    return PerturbationRealization(
        variant="correlated_noise", spec=spec, realization_id=doc.get("realization_id"),
        bucket_shifts=np.asarray(doc["bucket_shifts"], dtype=float))


def save_realization(xi: PerturbationRealization, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(realization_to_json(xi), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_realization(path) -> PerturbationRealization:
    with open(path, encoding="utf-8") as fh:
        return realization_from_json(json.load(fh))
