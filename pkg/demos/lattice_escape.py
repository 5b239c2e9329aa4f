"""Lattice chain without an invariant measure.

The second coordinate grows by one at every step, so every bounded set of
the index metric is left for good and the Cesaro laws are not tight.  In
the sup-norm sequence metric the chain still returns near ``(1, 0, inf)``,
because long runs of the third coordinate push the state toward it.

Run with ``python demos/lattice_escape.py``.
"""

import math

from ergodiag.coupling import estimate_gamma
from ergodiag.diagnostics import LimitGridSpec, ball_mass_curve, check_tightness
from ergodiag.models import lattice_model
from ergodiag.states import LATTICE_INDEX, LatticeTriple

model = lattice_model()
start = LatticeTriple(1, 0, 1)

for R in (2, 5, 10):
    mass = ball_mass_curve(model.countable, start, start, R, range(1, 16), LATTICE_INDEX)
    print(f"R = {R:<2d} P_n(B(start, R)), n = 1..15:", " ".join(f"{m:.2f}" for m in mass))

rep = check_tightness(model, start, [1, 2, 5, 10, 20], LimitGridSpec(t_grid=tuple(range(1, 61))),
                      metric=LATTICE_INDEX)
print("tightness:", rep.verdict, "m(R) =", [round(v, 3) for v in rep.curves["m"]["y"]])

z = LatticeTriple(1, 0, math.inf)
probes = [LatticeTriple(1, 0, 1), LatticeTriple(3, 0, 1), LatticeTriple(1, 0, 6)]
for metric, name in ((model.metric, "sup-norm"), (LATTICE_INDEX, "index")):
    g = estimate_gamma(model.countable, z, 0.125, probes, range(1, 61), metric=metric)
    print(f"{name:8s} metric: tail-min mass near z = {g.floor:.4f}, gamma = {g.gamma:.4f}")
