"""Absorbing dyadic chain: convergence in total variation but not in W1.

From ``2**i`` the chain jumps to ``2**(i+1)`` or to the absorbing state 0
with probability 1/2 each.  The mass escaping to infinity shrinks
geometrically while carrying a constant first moment, so the chain is
stable for bounded and sublinear test functions and unstable for ``V``.

Run with ``python demos/dyadic_counterexample.py``.
"""

import numpy as np

from ergodiag.diagnostics import LimitGridSpec, check_uniform_integrability, stability_report
from ergodiag.distances import tv_distance, wasserstein_exact, weighted_tv
from ergodiag.markov import SparseDistribution, integrate, propagate_many
from ergodiag.models import dyadic

model = dyadic.dyadic_chain()
start = SparseDistribution.point(2 ** 3)
zero = SparseDistribution.point(0)
laws = propagate_many(model.countable, start, range(0, 11))

print("n   TV        W1    d_V       E V   E V^1/2")
for n, law in laws.items():
    tv = tv_distance(law, zero)
    w1 = wasserstein_exact(law, zero, 1)[0]
    dv = weighted_tv(law, zero, float)
    print(f"{n:<3d} {tv:<9.3g} {w1:<5g} {dv:<9.4g} {integrate(law, float):<5g} "
          f"{integrate(law, np.sqrt):.4g}")

# uniform integrability decides which test functions the chain forgets
grid = LimitGridSpec(t_grid=dyadic.EXACT_STEPS)
K = [2.0 ** k for k in range(0, 21)]
for name, f in (("V", float), ("V^1/2", np.sqrt)):
    rep = check_uniform_integrability(model.countable, 8, f, K, grid, name=name)
    print(f"UI of {name:5s}: {rep.verdict:4s}  T(2^20) = {rep.statistic:.3g}")

for fam in ("F_ALPHA(0.5)", "F_SUPNORM", "F_ALPHA(1)"):
    rep = stability_report(model, model.family(fam))
    print(f"{fam:12s} {rep.verdict:12s} {rep.details}")
