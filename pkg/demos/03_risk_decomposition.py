"""Pointwise risk split into bias^2, sampling variance, distributional variance.

The law of total variance over the perturbation draw adds a third error term
to the classical two: the variance of the estimator's conditional mean across
data-generating realizations. Nested Monte Carlo estimates all three; their
sum must reproduce the total mean squared error within Monte Carlo error.
"""

from rupsim import (BaselineConfig, CorrelatedNoiseSpec, LpeConfig,
                    pointwise_risk_mc, sine_function)

base = BaselineConfig(f=sine_function(), sigma2=1.0, n=400)
lpe = LpeConfig(order=1, bandwidth=0.15)

print(f"n={base.n}, h={lpe.bandwidth}, x0=0.5, outer 150 x inner 30 replicates\n")
print(f"{'tau':>7} {'bias^2':>10} {'sampling':>10} {'distrib':>10} "
      f"{'sum':>10} {'total':>10} {'resid/se':>9}")
for tau in (0.0, 0.01, 0.04):
    spec = CorrelatedNoiseSpec(b_x=10, delta2=tau * 10, baseline=base)
    rep = pointwise_risk_mc(base, spec, lpe, x0=0.5, reps_xi=150, reps_data=30,
                            seed=314)
    total_of_parts = rep.bias2 + rep.sampling_var + rep.diagnostics["dist_var_raw"]
    print(f"{tau:>7.3f} {rep.bias2:>10.5f} {rep.sampling_var:>10.5f} "
          f"{rep.dist_var:>10.5f} {total_of_parts:>10.5f} {rep.total_mse:>10.5f} "
          f"{rep.identity_residual / rep.se_combined:>9.2f}")

print("\nthe distributional column grows with tau while the others stay put;")
print("the residual column stays within a few combined standard errors of 0.")
