"""Kelvin wave around a disk with f = 10, c = 1.

The wave is trapped against the boundary.  Energy radiated into the
interior, relative to the initial amplitude, should stay small.
"""

from mixedswe import scenarios as sc

res = sc.run_kelvin(t_end=2.0)
for k, v in sorted(res.metrics.items()):
    print(f"{k:20s} {v:.3e}")
print("passed" if res.passed else f"failed: {res.failures}")
