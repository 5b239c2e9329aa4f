"""Coupling tail bounds and a Lyapunov comparison bound.

Two independent copies of the dyadic chain meet at 0 once both have been
absorbed; the survival of the coupling time is ``1 - (1 - 2**-n)**2``.  The
lower bound ``gamma`` on the probability of entering a small ball around 0
turns into the geometric tail ``(1 - gamma/2)**n``.

Run with ``python demos/coupling_and_drift.py``.
"""

from ergodiag import coupling
from ergodiag.diagnostics import LyapunovSpec, lyapunov_bound
from ergodiag.models import dyadic

model = dyadic.dyadic_chain()
ck = coupling.product_kernel(model)

g = coupling.estimate_gamma(model.countable, 0, 0.5, [0, 2, 4, 2 ** 10], range(0, 49))
print(f"gamma = {g.gamma:.6f} (floor {g.floor:.6f})")

exact = coupling.exact_survival(ck, (2, 2), 0, 0.5, 10)
taus = coupling.hitting_times(ck, (2, 2), 0, 0.5, 10, 100_000, seed=1)
S, se = coupling.survival_curve(taus, 10)
print("n   exact     Monte Carlo  stderr")
for n in range(1, 11):
    print(f"{n:<3d} {exact[n]:<9.5f} {S[n]:<12.5f} {se[n]:.5f}")

rep = coupling.verify_tail_bound(ck, (2, 2), 0, 0.5, 0.25, 10, 100_000, seed=1)
print("tail bound verdict:", rep.verdict, "block horizons:", rep.block_horizons)

for spec in (LyapunovSpec.linear(1.0, 5.0), LyapunovSpec.log1p(2.0, 0.5)):
    res = lyapunov_bound(spec, t_max=20.0)
    print(f"phi = {spec.name:9s} C = {spec.C:g} U0 = {spec.U0:g}: sup f = {res.bound:.6f}, "
          f"f(20) = {res.limit:.6f}, monotone = {res.monotone}, crossings = {res.crossings}")
