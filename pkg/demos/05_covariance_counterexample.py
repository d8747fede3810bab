"""Why cumulants and not covariances.

Four pointers probe a chain that factorizes between the pairs (1,2) and (3,4).
The weak-value cumulant of all four vanishes, and so does the pointer
cumulant at fourth order in g. The four-point covariance does not vanish at
that order: it keeps products of the two pair correlations.
"""
from weakcumulants import (Experiment, PointerConfig, PointerGrid, bottleneck_double_pair,
                           covariance_counterexample, pointer_family, sequential_weak_value)

grid = PointerGrid(-12.0, 12.0, 64)
chain = bottleneck_double_pair()
exp = Experiment(chain, [PointerConfig(pointer_family("gaussian", grid), "p", "q", 1e-2)] * 4)

print(f"(A2,A1)_w = {sequential_weak_value(chain, (1, 2)).real:+.3f}, "
      f"(A4,A3)_w = {sequential_weak_value(chain, (3, 4)).real:+.3f}, "
      f"(A4,...,A1)_w = {sequential_weak_value(chain, (1, 2, 3, 4)).real:+.3f}")
report = covariance_counterexample(exp)
print(f"  {'g':>8} {'cumulant':>12} {'covariance':>12}")
for g, c, v in zip(report.g_values, report.details["cumulants"], report.details["covariances"]):
    print(f"  {g:8.1e} {c:12.3e} {v:12.3e}")
print(f"fourth-order coefficient: cumulant {report.lhs:.2e}, covariance {report.rhs:.4f}")
print(f"ratio {report.details['coefficient_ratio']:.1e}: {'pass' if report.passed else 'FAIL'}")
