"""Config-driven experiment runner.

Subcommands: sample, mise-sweep, bandwidth-vs-n, kl-check, estimate-tau.
Each run reads one YAML config, derives every random stream from the
mandatory seed, writes CSV artifacts plus SVG charts rendered purely from
those CSVs, and records a manifest with the fully defaulted config echo and
per-output checksums. Reruns with the same config and seed are
checksum-identical for any --threads value.

Exit codes: 0 success, 2 config error, 3 numeric/regime warnings under
--strict.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import (effective_sample_size, estimate_tau_from_summaries,
                        oracle_bandwidth, within_bucket_noise_variance)
from .baseline import BaselineConfig, get_function, sample_baseline
from .config import Conf, ConfigError, load_yaml
from .kernels import KERNELS, get_kernel
from .klscale import correlated_noise_kl_suite
from .local_poly import LpeConfig
from .perturbation import (CorrelatedNoiseSpec, PartitionSpec, WeightLaw,
                           draw_perturbation, sample_perturbed, save_realization)
from .risk import mise_mc, optimal_bandwidth_curve
from .streams import substream
from .svgplot import line_chart

DEFAULT_WINDOW = (0.05, 0.95)
DEFAULT_GRID_POINTS = 101


# ---------------------------------------------------------------- file output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ------------------------------------------------------------- config parsing

def _parse_baseline(root: Conf, need: str = "n"):
    blk = root.block("baseline")
    fname = blk.get_str("f", default="sine", choices=sorted(("zero", "sine")))
    sigma2 = blk.get_float("sigma2", ge=0.0)
    echo = {"f": fname, "sigma2": sigma2}
    if need == "n":
        n = blk.get_int("n", ge=1)
        echo["n"] = n
        return BaselineConfig(f=get_function(fname), sigma2=sigma2, n=n), echo
    n_grid = blk.get_int_list("n_grid", ge=1)
    echo["n_grid"] = n_grid
    return BaselineConfig(f=get_function(fname), sigma2=sigma2, n=n_grid[0]), n_grid, echo


def _parse_rup_spec(root: Conf, base: BaselineConfig, models=("correlated_noise", "partition")):
    blk = root.block("rup")
    model = blk.get_str("model", choices=models)
    b_x = blk.get_int("b_x", ge=1)
    echo = {"model": model, "b_x": b_x}
    if model == "correlated_noise":
        delta2 = blk.get_float("delta2", ge=0.0)
        echo["delta2"] = delta2
        return CorrelatedNoiseSpec(b_x=b_x, delta2=delta2, baseline=base), echo
    b_eps = blk.get_int("b_eps", ge=2)
    law_blk = blk.block("weight_law", required=False)
    if law_blk is None:
        law = WeightLaw.exponential()
        echo["weight_law"] = {"kind": "exp"}
    else:
        kind = law_blk.get_str("kind", default="exp", choices=("exp", "lognormal"))
        if kind == "exp":
            law = WeightLaw.exponential()
            echo["weight_law"] = {"kind": "exp"}
        else:
            ratio = law_blk.get_float("var_over_mean_sq", default=1.0, gt=0.0)
            law = WeightLaw.lognormal_with_ratio(ratio)
            echo["weight_law"] = {"kind": "lognormal", "var_over_mean_sq": ratio}
    echo["b_eps"] = b_eps
    if base.sigma2 <= 0:
        raise ConfigError("baseline.sigma2: partition model needs sigma2 > 0")
    return PartitionSpec(b_x=b_x, b_eps=b_eps, weight_law=law, baseline=base), echo


def _parse_tau_grid(root: Conf) -> list[float]:
    blk = root.block("rup")
    return blk.get_float_list("tau_grid", ge=0.0)


def _parse_lpe(root: Conf):
    blk = root.block("lpe")
    order = blk.get_int("order", default=1, ge=0)
    if order > 5:
        raise ConfigError("lpe.order: must be at most 5")
    kname = blk.get_str("kernel", default="epanechnikov", choices=sorted(KERNELS))
    h_grid = _parse_h_grid(blk)
    echo = {"order": order, "kernel": kname, "h_grid": h_grid}
    cfg = LpeConfig(order=order, bandwidth=h_grid[0], kernel=get_kernel(kname))
    return cfg, h_grid, echo


def _parse_h_grid(blk: Conf) -> list[float]:
    raw = blk._data.get("h_grid")
    if isinstance(raw, dict):
        sub = blk.block("h_grid")
        lo = sub.get_float("min", gt=0.0)
        hi = sub.get_float("max", gt=0.0)
        count = sub.get_int("count", ge=1)
        spacing = sub.get_str("spacing", default="log", choices=("log", "linear"))
        if hi < lo:
            raise ConfigError("lpe.h_grid.max: must be >= min")
        if hi > 1.0:
            raise ConfigError("lpe.h_grid.max: bandwidths must lie in (0, 1]")
        if spacing == "log":
            grid = np.geomspace(lo, hi, count)
        else:
            grid = np.linspace(lo, hi, count)
        return [float(h) for h in grid]
    grid = blk.get_float_list("h_grid", ge=0.0)
    if min(grid) <= 0 or max(grid) > 1:
        raise ConfigError("lpe.h_grid: bandwidths must lie in (0, 1]")
    return sorted(grid)


def _parse_eval_grid(root: Conf):
    blk = root.block("eval", required=False)
    if blk is None:
        lo, hi = DEFAULT_WINDOW
        points = DEFAULT_GRID_POINTS
    else:
        window = blk.get_float_list("window", default=list(DEFAULT_WINDOW), min_len=2)
        if len(window) != 2 or not 0.0 <= window[0] < window[1] <= 1.0:
            raise ConfigError("eval.window: expected [lo, hi] with 0 <= lo < hi <= 1")
        lo, hi = window
        points = blk.get_int("grid_points", default=DEFAULT_GRID_POINTS, ge=2)
    echo = {"window": [lo, hi], "grid_points": points}
    return np.linspace(lo, hi, points), echo


# ----------------------------------------------------------------- subcommands

def cmd_sample(root: Conf, seed: int, outdir: Path, threads: int):
    base, becho = _parse_baseline(root)
    echo = {"baseline": becho}
    outputs = {}
    if root.has("rup"):
        spec, recho = _parse_rup_spec(root, base)
        echo["rup"] = recho
        xi = draw_perturbation(spec, substream(seed, "xi", 0), realization_id="xi00000")
        ds = sample_perturbed(spec, xi, base.n, substream(seed, "data", 0))
        real_path = outdir / "realization.json"
        save_realization(xi, real_path)
        outputs["realization.json"] = real_path
    else:
        ds = sample_baseline(base, substream(seed, "data", 0))
    rows = []
    for i in range(len(ds)):
        rows.append((ds.xs[i], ds.ys[i],
                     None if ds.bucket_ids is None else int(ds.bucket_ids[i]),
                     ds.realization_id))
    csv_path = outdir / "dataset.csv"
    write_csv(csv_path, ["x", "y", "bucket_id", "realization_id"], rows)
    outputs["dataset.csv"] = csv_path
    print(f"sampled {len(ds)} points -> {csv_path}")
    return echo, outputs, []


def cmd_mise_sweep(root: Conf, seed: int, outdir: Path, threads: int):
    base, becho = _parse_baseline(root)
    spec_blk = root.block("rup")
    model = spec_blk.get_str("model", default="correlated_noise",
                             choices=("correlated_noise",))
    b_x = spec_blk.get_int("b_x", ge=1)
    tau_grid = _parse_tau_grid(root)
    lpe_base, h_grid, lecho = _parse_lpe(root)
    eval_grid, eecho = _parse_eval_grid(root)
    mc = root.block("mc")
    reps = mc.get_int("reps", default=100, ge=2)
    echo = {"baseline": becho, "rup": {"model": model, "b_x": b_x, "tau_grid": tau_grid},
            "lpe": lecho, "eval": eecho, "mc": {"reps": reps}}

    warnings: list[str] = []
    rows = []
    for tau in tau_grid:
        spec = CorrelatedNoiseSpec(b_x=b_x, delta2=tau * b_x, baseline=base)
        curve = mise_mc(base, spec, lpe_base, h_grid, eval_grid, reps, seed, threads)
        for h, m, s in curve.rows:
            rows.append((h, tau, m, s))
        for h in curve.meta["failed_h"]:
            warnings.append(f"tau={tau:g}: h={h:g} invalid (no local support on the grid)")
        print(f"tau={tau:g}: argmin_h={curve.argmin_h:g}")
    csv_path = outdir / "mise_curve.csv"
    write_csv(csv_path, ["h", "tau", "mise", "se"], rows)
    svg_path = outdir / "fig4.svg"
    _render_mise_svg(csv_path, svg_path)
    return echo, {"mise_curve.csv": csv_path, "fig4.svg": svg_path}, warnings


def _render_mise_svg(csv_path: Path, svg_path: Path) -> None:
    data = read_csv(csv_path)
    groups: dict[str, list[tuple[float, float]]] = {}
    for row in data:
        groups.setdefault(row["tau"], []).append((float(row["h"]), float(row["mise"])))
    series = [(f"tau={tau}", [p[0] for p in pts], [p[1] for p in pts])
              for tau, pts in groups.items()]
    svg_path.write_text(line_chart(series, xlabel="bandwidth h", ylabel="MISE",
                                   title="MISE against bandwidth"), encoding="utf-8")


def cmd_bandwidth_vs_n(root: Conf, seed: int, outdir: Path, threads: int):
    base, n_grid, becho = _parse_baseline(root, need="n_grid")
    spec_blk = root.block("rup")
    model = spec_blk.get_str("model", default="correlated_noise",
                             choices=("correlated_noise",))
    b_x = spec_blk.get_int("b_x", ge=1)
    tau_grid = _parse_tau_grid(root)
    lpe_base, h_grid, lecho = _parse_lpe(root)
    eval_grid, eecho = _parse_eval_grid(root)
    mc = root.block("mc")
    reps = mc.get_int("reps", default=100, ge=2)
    echo = {"baseline": becho, "rup": {"model": model, "b_x": b_x, "tau_grid": tau_grid},
            "lpe": lecho, "eval": eecho, "mc": {"reps": reps}}

    table = optimal_bandwidth_curve(base, lpe_base, b_x, tau_grid, n_grid,
                                    h_grid, eval_grid, reps, seed, threads)
    rows = [(r["n"], r["tau"], r["h_star"]) for r in table]
    csv_path = outdir / "hstar_vs_n.csv"
    write_csv(csv_path, ["n", "tau", "h_star"], rows)
    svg_path = outdir / "fig5.svg"
    _render_hstar_svg(csv_path, svg_path)
    for r in table:
        print(f"n={r['n']} tau={r['tau']:g}: h_star={r['h_star']:g}")
    return echo, {"hstar_vs_n.csv": csv_path, "fig5.svg": svg_path}, []


def _render_hstar_svg(csv_path: Path, svg_path: Path) -> None:
    data = read_csv(csv_path)
    groups: dict[str, list[tuple[float, float]]] = {}
    for row in data:
        groups.setdefault(row["tau"], []).append((float(row["n"]), float(row["h_star"])))
    series = [(f"tau={tau}", [p[0] for p in pts], [p[1] for p in pts])
              for tau, pts in groups.items()]
    svg_path.write_text(line_chart(series, xlabel="n", ylabel="optimal bandwidth",
                                   title="Optimal bandwidth against sample size",
                                   logx=True, logy=True), encoding="utf-8")


def cmd_kl_check(root: Conf, seed: int, outdir: Path, threads: int):
    blk = root.block("baseline", required=False)
    sigma2 = blk.get_float("sigma2", default=1.0, gt=0.0) if blk else 1.0
    kl = root.block("kl")
    n_grid = kl.get_int_list("n_grid", ge=2)
    delta2 = kl.get_float("delta2", ge=0.0)
    beta = kl.get_float("beta", default=1.0, gt=0.0)
    holder_const = kl.get_float("holder_const", default=1.0, gt=0.0)
    x0 = kl.get_float("x0", default=0.5, ge=0.0)
    if x0 > 1.0:
        raise ConfigError("kl.x0: must lie in [0, 1]")
    reps = kl.get_int("reps", default=400, ge=2)
    rule_name = kl.get_str("bucket_rule", default="per_point",
                           choices=("per_point", "fixed"))
    if rule_name == "fixed":
        b_x = kl.get_int("b_x", ge=1)
        bucket_rule = lambda n: b_x
    else:
        b_x = None
        bucket_rule = None
    echo = {"baseline": {"sigma2": sigma2},
            "kl": {"n_grid": n_grid, "delta2": delta2, "beta": beta,
                   "holder_const": holder_const, "x0": x0, "reps": reps,
                   "bucket_rule": rule_name, "b_x": b_x}}
    base = BaselineConfig(f=get_function("zero"), sigma2=sigma2, n=n_grid[0])
    table = correlated_noise_kl_suite(n_grid, delta2, base, beta, holder_const, x0,
                                      bucket_rule=bucket_rule, reps=reps,
                                      seed=seed, threads=threads)
    rows = [(r.n, r.n_eff, r.kl_mean, r.kl_se, r.ratio, r.regime_warning)
            for r in table.rows]
    csv_path = outdir / "kl_scaling.csv"
    write_csv(csv_path, ["n", "n_eff", "kl_mean", "kl_se", "ratio", "regime_warning"], rows)
    warnings = []
    if table.regime_warning:
        warnings.append("n/B_X grows across the grid: outside the bounded-occupancy "
                        "regime, the ratio column need not stabilize")
    for r in table.rows:
        print(f"n={r.n}: n_eff={r.n_eff:.4g} kl={r.kl_mean:.6g} ratio={r.ratio:.6g}")
    return echo, {"kl_scaling.csv": csv_path}, warnings


def cmd_estimate_tau(root: Conf, seed: int, outdir: Path, threads: int):
    est_blk = root.block("tau_estimate", required=False)
    warnings: list[str] = []
    if est_blk is not None and est_blk.has("from_files"):
        paths = est_blk.get_str_list("from_files", min_len=2)
        thetas, n_pers, sig_parts = [], [], []
        for p in paths:
            data = read_csv(Path(p))
            if not data:
                raise ConfigError(f"tau_estimate.from_files: {p} has no data rows")
            if "y" not in data[0]:
                raise ConfigError(f"tau_estimate.from_files: {p} lacks a 'y' column")
            ys = np.array([float(row["y"]) for row in data])
            thetas.append(float(ys.mean()))
            n_pers.append(ys.size)
            if data[0].get("bucket_id", ""):
                buckets = np.array([int(row["bucket_id"]) for row in data])
                sig_parts.append(within_bucket_noise_variance(ys, buckets))
            else:
                sig_parts.append(float(np.var(ys, ddof=1)))
                warnings.append(f"{p}: no bucket ids; sigma2 from raw variance "
                                "(inflated by the shift variance)")
        if len(set(n_pers)) != 1:
            raise ConfigError("tau_estimate.from_files: realizations have unequal sizes")
        n_per = n_pers[0]
        j = len(paths)
        theta = np.array(thetas)
        sigma2_hat = float(np.mean(sig_parts))
        echo = {"tau_estimate": {"from_files": paths}}
    else:
        base, becho = _parse_baseline(root)
        spec, recho = _parse_rup_spec(root, base)
        mc = root.block("mc")
        j = mc.get_int("j", default=500, ge=2)
        echo = {"baseline": becho, "rup": recho, "mc": {"j": j}}
        if base.f.name != "zero":
            warnings.append("baseline.f is not 'zero': outcome means also vary with "
                            "f; the estimate assumes centered outcomes")
        theta = np.empty(j)
        sig_parts = np.empty(j)
        for i in range(j):
            xi = draw_perturbation(spec, substream(seed, "xi", i), realization_id=f"xi{i:05d}")
            ds = sample_perturbed(spec, xi, base.n, substream(seed, "data", i))
            theta[i] = ds.ys.mean()
            sig_parts[i] = within_bucket_noise_variance(ds.ys, ds.bucket_ids)
        n_per = base.n
        sigma2_hat = float(sig_parts.mean())

    bw_blk = root.block("bandwidth", required=False)
    beta = bw_blk.get_float("beta", default=2.0, gt=0.0) if bw_blk else 2.0
    echo["bandwidth"] = {"beta": beta}
    tau_hat = estimate_tau_from_summaries(theta, n_per, sigma2_hat)
    theta_var = float(np.var(theta, ddof=1))
    n_eff = effective_sample_size(n_per, tau_hat).n_eff
    h_star = oracle_bandwidth(n_per, tau_hat, beta)
    csv_path = outdir / "tau_report.csv"
    write_csv(csv_path,
              ["j", "n_per", "sigma2_hat", "theta_var", "sampling_component",
               "tau_hat", "n_eff", "h_star"],
              [(j, n_per, sigma2_hat, theta_var, sigma2_hat / n_per, tau_hat, n_eff, h_star)])
    print(f"tau_hat={tau_hat:.6g} (theta_var={theta_var:.6g}, "
          f"sampling={sigma2_hat / n_per:.6g}), n_eff={n_eff:.6g}, h_star={h_star:.6g}")
    return echo, {"tau_report.csv": csv_path}, warnings


COMMANDS = {
    "sample": cmd_sample,
    "mise-sweep": cmd_mise_sweep,
    "bandwidth-vs-n": cmd_bandwidth_vs_n,
    "kl-check": cmd_kl_check,
    "estimate-tau": cmd_estimate_tau,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rupsim",
                                     description="Perturbed-regression experiment runner")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the YAML run config")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for Monte Carlo replicates")
    common.add_argument("--strict", action="store_true",
                        help="exit 3 on numeric/regime warnings")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    args = parser.parse_args(argv)

    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg = load_yaml(args.config)
        root = Conf(cfg)
        seed = args.seed if args.seed is not None else root.get_int("seed", ge=0)
        out_blk = root.block("output", required=False)
        out_default = out_blk.get_str("dir", default="out") if out_blk else "out"
        outdir = Path(args.out if args.out is not None else out_default)
        outdir.mkdir(parents=True, exist_ok=True)
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        echo, outputs, warnings = COMMANDS[args.command](root, seed, outdir, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    echo["seed"] = seed
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": seed,
        "threads": args.threads,
        "config": echo,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {name: _sha256(path) for name, path in sorted(outputs.items())},
    }
    manifest_path = outdir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name in sorted(outputs):
        print(f"wrote {outputs[name]}")
    print(f"wrote {manifest_path}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if warnings and args.strict:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
