"""
Watching the excess risk decay
==============================

A small version of the rate experiment: for each N we draw l = ceil(N^0.4)
Gaussian bags, fit with lambda from the row-1 schedule, and measure excess
risk on fresh distributions. The log-log slope should be near -0.4. This
grid is smaller than the acceptance run, so expect more noise.
"""

from distreg.experiments import RateExperimentConfig, run_rate_experiment

cfg = RateExperimentConfig(N_grid=(100, 200, 400, 800), reps=2, seed=0)
rep = run_rate_experiment(cfg)
for row in rep.rows():
    print(f"N={row['N']:>5} l={row['l']:>3} lambda={row['lambda']:.4f} excess={row['excess_proxy']:.5f}")
print(f"slope {rep.slope:.3f} +/- {rep.slope_se:.3f}; predicted -{rep.predicted_exponent}")
