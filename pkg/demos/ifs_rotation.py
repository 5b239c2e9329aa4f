"""Random iterated function system coupled with a rotation on the circle.

The half-line component jumps at unit rate and is absorbed at 0; the angle
rotates deterministically.  The invariant law is ``delta_0 x Leb`` and
Cesaro averages converge to it, but only at rate ``1/T``: from ``(1, 0)``
the expected time spent away from 0 is 3, so ``Q_T min(x, 1) = 3 / T``.

Run with ``python demos/ifs_rotation.py``.
"""

import math

import numpy as np

from ergodiag.markov import cesaro_Qtf
from ergodiag.models import ifs

model = ifs.ifs_torus()
start = (1.0, 0.0)
minx = lambda s: np.minimum(np.asarray(s)[..., 0], 1.0)
cosy = lambda s: np.cos(np.asarray(s)[..., 1])

print("T       exact Q_T min(x,1)   T * Q_T   exact Q_T cos(y)")
for T in (10.0, 100.0, 1000.0, 10_000.0):
    q = ifs.cesaro_expectation(start, T, minx)
    c = ifs.cesaro_expectation(start, T, cosy)
    print(f"{T:<7g} {q:<20.6g} {T * q:<9.4f} {c:.3g}")

# Monte Carlo at T = 1000 resolves the finite-horizon value, not the limit 0
for name, f in (("min(x,1)", minx), ("cos(y)", cosy)):
    est = cesaro_Qtf(model.sampler, start, 1000.0, f, mode="monte-carlo", n_samples=20_000, seed=3)
    exact = ifs.cesaro_expectation(start, 1000.0, f)
    print(f"{name:9s} MC {est.mean:.5f} +- {est.stderr:.5f}   exact {exact:.5f}   "
          f"z vs exact {(est.mean - exact) / est.stderr:+.2f}   z vs limit {est.mean / est.stderr:+.2f}")
print("from x = 0 the law is a rotation: Q_T cos = sin(T)/T =", math.sin(1000.0) / 1000.0)
