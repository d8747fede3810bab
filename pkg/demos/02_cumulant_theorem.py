"""The pointer cumulant tracks the weak-value cumulant to order n.

Two Gaussian pointers read out in position after momentum coupling to the
double interferometer. The connected correlation <q1 q2> - <q1><q2> equals
g1 g2 Re(xi W) up to corrections of higher order in g, so the residual falls
faster than g^2. A chirped/boosted mix with momentum readout follows the same
law once xi is computed for those pointers.
"""
import numpy as np

from weakcumulants import (DEFAULT_GRID, Experiment, PointerConfig, double_interferometer, pointer_family,
                           random_chain, verify_cumulant_theorem)


def experiment(chain, families, readouts, g=1e-2):
    pointers = [PointerConfig(pointer_family(f, DEFAULT_GRID), "p", r, g) for f, r in zip(families, readouts)]
    return Experiment(chain, pointers)


cases = [
    ("double interferometer, Gaussian, q q", experiment(double_interferometer(), ["gaussian"] * 2, ["q", "q"])),
    ("random d=4, chirped/boosted, p q", experiment(random_chain(4, 2, 1), ["chirped", "boosted"], ["p", "q"])),
    ("random d=4 n=3, boosted, q q q", experiment(random_chain(4, 3, 2), ["boosted"] * 3, ["q"] * 3)),
]
for name, exp in cases:
    report = verify_cumulant_theorem(exp, levels=(1e-2, 5e-3, 2.5e-3, 1.25e-3))
    print(name)
    print(f"  {'g':>9} {'residual':>12}")
    for g, r in zip(report.g_values, report.residuals):
        print(f"  {g:9.2e} {r:12.3e}")
    print(f"  lhs {np.real(report.lhs):+.6e}  rhs {np.real(report.rhs):+.6e}")
    print(f"  slope {report.scaling_exponent:.2f} (needs {report.required_exponent:.1f}): "
          f"{'pass' if report.passed else 'FAIL'}")
