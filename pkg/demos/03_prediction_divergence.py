"""Gaussian-tail weight: the filter forgets, the prediction filter has no V-moment.

With V(x) = exp(c x^2 / 2) and c above the inverse stationary variance,
every prediction law N(m, v) has v >= 1 > 1/c, so its V-moment is
infinite.  The filter laws have variance below 1/c and stay V-integrable.
"""
import numpy as np

from vstab import (GaussianState, Grid, ModelSpec, Scenario, WeightSpec, gaussian_v_moment,
                   grid_gaussian, kalman_filter, kalman_predict, kappa, prediction_vnorm_divergence,
                   rate_estimate, stability_run)

alpha, c = 0.5, 1.5
v = WeightSpec("exp_square", c)
print(f"kappa(alpha={alpha}, c={c}) = {kappa(alpha, c)}")

radii = np.arange(1.0, 11.0)
for r, val in zip(radii, prediction_vnorm_divergence(alpha, c, radii)):
    print(f"  truncated V-integral over [-{r:.0f}, {r:.0f}]: {val:.4e}")

model = ModelSpec.linear(alpha)
grid = Grid.symmetric(40, 2400)
tr = stability_run(model, Scenario.FILTER, grid_gaussian(grid, 0, 0.5), grid_gaussian(grid, 1.5, 0.4),
                   n=200, seed=3, v=v, ybar=3 * np.sqrt(1 / (1 - alpha ** 2) + 1))
fit = rate_estimate(tr, burn=20, n_max=200)
print(f"filter scenario: log gap_V slope {fit.slope:.3f}, r2 {fit.r2:.3f}")

states, _ = kalman_filter(GaussianState(0.0, 0.5), np.zeros(30), alpha, 1.0)
post = states[-1]
pred = kalman_predict(post, alpha)
print(f"filter variance {post.var:.4f}: V-moment {gaussian_v_moment(post, v):.4f}")
print(f"prediction variance {pred.var:.4f}: V-moment {gaussian_v_moment(pred, v)}")
