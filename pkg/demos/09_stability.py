"""Pathwise stability: two runs, one path, a shrinking gap.

Perturbs the initial data by delta along a fixed unit direction, drives
both copies with identical noise increments, and reports the squared-energy
gap together with the quartic budget that bounds its growth.  Halving delta
halves the gap: linear response, the footprint of pathwise uniqueness.
"""

import os

import numpy as np

from spdegal import sample_path
from spdegal.analysis import replicate_seed, stability_study
from spdegal.config import parse_config

CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "configs")

cfg = parse_config(open(os.path.join(CONFIGS, "stability_2d.toml")).read())
path = sample_path(replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, cfg.nspec.K)

print("delta        sup_t |gap|      budget")
sups = []
for delta in (1e-2, 5e-3, 2.5e-3, 0.0):
    rep = stability_study(cfg.ops, cfg.nspec, cfg.phi0, delta, cfg.integrator, path)
    sup = float(np.sqrt(rep.sup_diff_h2))
    sups.append(sup)
    print(f"{delta:<10}  {sup:.8e}   {rep.gronwall_budget:.4f}")

print("\nratios between successive deltas:",
      [f"{sups[i]/sups[i+1]:.3f}" for i in range(2)])
print("delta = 0 reproduces the base run bit for bit (gap identically zero):",
      sups[-1] == 0.0)
