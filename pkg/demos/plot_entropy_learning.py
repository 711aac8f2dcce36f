"""
Learning the entropy of a distribution from samples
===================================================

Bags come from N(0, A A^T) with a random rotation-and-scale A, labelled with
their differential entropy. The label depends on the spread, not on any
single point, so this is a task for a kernel on distributions.
"""

from distreg.experiments import run_entropy_task

s = run_entropy_task(dim=2, l_train=100, l_test=40, N=200, seed=0)
print(f"lambda by CV:   {s.lam:g}")
print(f"train RMSE:     {s.train_rmse:.4f}")
print(f"test RMSE:      {s.test_rmse:.4f}")
print(f"predict-mean:   {s.baseline_rmse:.4f}")
