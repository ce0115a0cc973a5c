"""The six models behind one interface, and their structure checks.

Instantiates every model, shows the pieces of the right-hand side on a
random state, and runs the randomized structure suite: convective energy
neutrality, three-slot antisymmetry, nonnegative damping, closed-form noise
Lipschitz constants, and agreement with the direct convolution oracle.
"""

import numpy as np

from spdegal import EvolutionOperators, ModelSpec, SpectralBasis, default_noise, random_state
from spdegal.analysis import check_properties
from spdegal.state import h_norm, inner_product

MODELS = [
    ("cbf", 2, dict(nu=1.0, alpha=0.5, beta=0.2)),
    ("mhd", 2, dict(nu=1.0, kappa=0.8)),
    ("boussinesq", 2, dict(nu=1.0, kappa=0.7, alpha=0.3, beta=0.1)),
    ("dynamo", 3, dict(nu1=1.0, nu2=0.9, nu3=0.8, sigma=0.5)),
    ("micropolar", 3, dict(mu=0.8, chi=0.3, gamma=0.6, nu=0.9, elastic=0.4)),
    ("tropical", 2, dict(nu1=1.0, nu2=0.9, nu3=0.8)),
]

for kind, d, params in MODELS:
    cutoff = 4 if d == 2 else 2
    basis = SpectralBasis(d, cutoff)
    spec = ModelSpec.build(kind, d, **params)
    ops = EvolutionOperators(spec, basis)
    rng = np.random.default_rng(0)
    phi = random_state(spec, basis, rng)
    adv = ops.advection(phi, phi)
    damping, coupling = ops.reaction_split(phi)
    print(f"{kind:<11} d={d} fields={spec.roster}")
    print(f"   |advection|={h_norm(adv):.4f}  <adv, state>={inner_product(adv, phi):+.2e}"
          f"  |damping|={h_norm(damping):.4f}  |coupling|={h_norm(coupling):.4f}")

print("\nrandomized structure suite (200 states per model):")
for kind, d, params in MODELS:
    cutoff = 4 if d == 2 else 2
    basis = SpectralBasis(d, cutoff)
    spec = ModelSpec.build(kind, d, **params)
    ops = EvolutionOperators(spec, basis)
    nspec = default_noise(spec, basis, K=2, sigma=0.1, gain=0.5)
    report = check_properties(ops, nspec, samples=200, seed=7)
    verdict = "all pass" if report.all_passed else "FAILURES"
    print(f"  {kind:<11} {verdict}")
    for line in report.lines():
        if "FAIL" in line or "advection_matches_convolution" in line:
            print("    " + line)
