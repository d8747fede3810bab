"""Weak values in two three-mode interferometers.

Both chains send a photon through beamsplitters and weakly probe two arm
projectors. In the double interferometer the single weak values vanish while
the sequential weak value of the pair does not, so the weak-value cumulant is
nonzero. The bottleneck version routes every surviving path through one mode
between the two probes, which factorizes the pair.
"""
import numpy as np

from weakcumulants import (bottleneck_interferometer, double_interferometer, is_weakly_independent,
                           path_amplitude_ratio, sequential_weak_value, weak_value_cumulant)


def fmt(z):
    z = complex(np.round(z, 12)) + 0
    return f"{z.real:+.4f}{z.imag + 0.0:+.4f}i"


for name, chain in [("double interferometer", double_interferometer()),
                    ("bottleneck", bottleneck_interferometer())]:
    a1 = sequential_weak_value(chain, (1,))
    a2 = sequential_weak_value(chain, (2,))
    a21 = sequential_weak_value(chain, (1, 2))
    print(name)
    print(f"  (A1)_w = {fmt(a1)}")
    print(f"  (A2)_w = {fmt(a2)}")
    print(f"  (A2,A1)_w = {fmt(a21)}   path-sum ratio {path_amplitude_ratio(chain).real:+.4f}")
    print(f"  weak-value cumulant = {fmt(weak_value_cumulant(chain))}")
    print(f"  weakly independent: {is_weakly_independent(chain, (1,), (2,))}")
    print(f"  post-selection amplitude |<f|U|i>| = {np.abs(chain.amplitude):.4f}")
