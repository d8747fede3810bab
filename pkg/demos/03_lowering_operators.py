"""Lowering operators recover complex weak values.

With a = q + i p / eta the pointer shift <a> - <a>_i equals g A_w as a complex
number for any pointer state. For two pointers the plain product <a1 a2>
reproduces g1 g2 (A2,A1)_w only when the pointers start with zero mean
position and momentum; a boosted pointer breaks this while the cumulant form
keeps working.
"""
from weakcumulants import (DEFAULT_GRID, Experiment, PointerConfig, pointer_family, random_chain,
                           sequential_weak_value, verify_lowering)


def experiment(chain, family, g=1e-2):
    return Experiment(chain, [PointerConfig(pointer_family(family, DEFAULT_GRID), "p", "q", g)] * chain.n)


one = random_chain(3, 1, 5)
print(f"A_w = {sequential_weak_value(one, (1,)):.5f}")
for family in ["gaussian", "chirped", "boosted", "random"]:
    r = verify_lowering(experiment(one, family), "n1")
    print(f"  {family:9s} <a> - <a>_i at g=1e-2: {r.lhs / 1e-2:.5f} x g   slope {r.scaling_exponent:.2f}")

two = random_chain(4, 2, 3)
for family in ["gaussian", "boosted"]:
    for mode in ["cumulant", "anticumulant_corollary"]:
        r = verify_lowering(experiment(two, family), mode)
        print(f"{family:9s} {mode:24s} slope {r.scaling_exponent:5.2f} {'pass' if r.passed else 'fail'}  {r.label}")
