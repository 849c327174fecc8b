"""Quasi-geostrophic Rossby wave: third order until the Ro^2 floor.

The shallow-water solution differs from the QG solution by O(Ro^2), so
the error against it stops falling once the mesh error drops below that.
Coarse sizes keep this demo quick; the acceptance suite uses 8, 16 and 32.
"""

from mixedswe import scenarios as sc

res = sc.run_rossby_convergence(sizes=(4, 8), ro=1e-3, dt=0.007996, t_end=1.0)
for n in (4, 8):
    print(f"n={n:2d}  l2 {res.metrics[f'l2_error_n{n}']:.3e}  linf {res.metrics[f'linf_error_n{n}']:.3e}")
print(f"observed slope {res.metrics['convergence_slope']:.2f}")
