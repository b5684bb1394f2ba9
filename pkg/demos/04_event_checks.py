"""Monte-Carlo verification of the high-probability events and bounds.

The convergence analysis rests on a handful of per-iteration events
(remainder control E1, spectral control E2, inner-product control E3,
quartile-boundary control E4/E5) plus classical probability bounds
(Chernoff, Gaussian max, chi-square tail, spectral norm, order
statistic tails).  Each checker replays the defining random experiment
and compares the observed failure rate against the stated bound at a
3-sigma binomial tolerance.

This is a reduced-trials version of the full suite that the CLI runs
with ``rankzo verify``.
"""

import numpy as np

import rankzo as rz
from rankzo.sampling import new_generator
from rankzo.theory import c_d_delta

# a state on an instrumented quadratic, with the smoothing radius at the
# regime bound ||grad|| / (4 L C_d)
d, n, delta = 50, 32, 0.1
obj = rz.make_quadratic(d, 1.0, 10.0, seed=3)
x = obj.x_star + new_generator(909).standard_normal(d)
gnorm = float(np.linalg.norm(obj.grad(x)))
alpha = gnorm / (4.0 * obj.L * c_d_delta(d, delta))
setup = rz.EventSetup(obj=obj, x=x, alpha=alpha, n=n, delta=delta)

print(f"{'check':12s} {'trials':>7s} {'empirical':>10s} {'bound':>10s}  pass")
for event in ("E1", "E2", "E3", "E4", "E5"):
    r = rz.check_event(event, setup, trials=2000, rng=new_generator(11))
    print(f"{r.event_id:12s} {r.trials:7d} {r.empirical_failure_rate:10.3g} "
          f"{r.theoretical_bound:10.3g}  {r.passed}")

for which in ("chernoff", "gauss_max", "chi2", "spectral",
              "order_low1", "order_low2"):
    r = rz.check_appendix_bounds(which, None, trials=5000, rng=new_generator(12))
    print(f"{r.event_id:12s} {r.trials:7d} {r.empirical_failure_rate:10.3g} "
          f"{r.theoretical_bound:10.3g}  {r.passed}")

print("\nconstants at (n=32, d=100, delta=0.1, L=10, mu=1, alpha=1e-4):")
tc = rz.theory_constants(32, 100, 0.1, L=10.0, mu=1.0, alpha=1e-4)
print(f"  C_d          = {tc.c_d_delta:.4f}")
print(f"  C_N          = {tc.c_N_d_delta:.4f}")
print(f"  tail p       = {tc.p_tail:.6f}  (exact 1 - Phi(2))")
print(f"  D(1/4 || p)  = {tc.kl_quarter:.6f}")
print(f"  rho          = {tc.rho:.3e}")
print(f"  floors       = {tc.delta_floor_sc:.3e} (sc), "
      f"{tc.delta_floor_nc:.3e} (nc)")
