"""Two filters started from different laws, along the same observation path.

The V-norm of their difference decays geometrically.  It drops below
1e-100 within 200 steps, so it is propagated by the exact difference
recursion rather than by subtracting the two filters.
"""
import numpy as np

from vstab import (Fn, Grid, ModelSpec, Scenario, WeightSpec, grid_gaussian, observation_sd,
                   rate_estimate, stability_run)

model = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("identity"))
v = WeightSpec("exp_abs", 1.0)
grid = Grid.symmetric(20, 2000)
ybar = 3 * observation_sd(model)

tr = stability_run(model, Scenario.FILTER, grid_gaussian(grid, 0, 1), grid_gaussian(grid, 3, 2),
                   n=200, seed=0, v=v, ybar=ybar)
fit = rate_estimate(tr, burn=20, n_max=200)
print(f"Ybar = +-{ybar:.3f}, gamma_hat = {tr.env.gamma_hat:.3f}, l_hat = {tr.env.l_hat:.3f}")
print(f"fitted rate: slope {fit.slope:.4f} per step, rho_hat {fit.rho_hat:.4f}, r2 {fit.r2:.5f}")
c = tr.constants
print(f"constants: gamma- {c.gamma_minus:.4f}, gamma+ {c.gamma_plus:.4f}, beta {c.beta:.4f}, d {c.d:.3f}")
print(f"plug-in rho: 1 - rho = exp({c.log_one_minus_rho:.1f})  (a sufficient rate, far from the realized one)")
print()
print("   n   log10 gap_V   log10 bound_forget   log10 vmom   log10 bound_echeck")
for n in (0, 1, 5, 20, 50, 100, 150, 200):
    print(f"{n:4d}   {tr.log_gap[n] / np.log(10):11.3f}   {tr.log_bound_forget[n] / np.log(10):18.3f}"
          f"   {tr.log_vmom[n] / np.log(10):10.3f}   {tr.log_bound_echeck[n] / np.log(10):18.3f}")
