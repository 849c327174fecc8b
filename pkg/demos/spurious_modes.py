"""Mode census and double-projection kernels for BDFM1 and RT0.

The generator of the linear system has one zero mode per dimension of
the streamfunction space, and all other frequencies come in +/- pairs.
The kernels of P^V P^E and P^E P^V flag spurious branches.
"""

from mixedswe import analysis as an
from mixedswe import dynamics as dyn
from mixedswe import mesh as msh
from mixedswe import operators as op

cfg = dyn.ModelConfig(c2=1.0, f_coeffs=1.0, dt=1.0)
ops = op.assemble(msh.build_periodic_square(3), cfg)
census = an.generator_spectrum(ops, cfg)
print(f"periodic 3x3: {census.zero_modes} zero modes (dim E = {ops.dim_E}), "
      f"{census.nonzero_modes} wave modes, pairing error {census.pairing_error:.1e}")

meshes = [(f"periodic {n}", msh.build_periodic_square(n)) for n in (2, 3, 4)]
for pair in ("bdfm1", "rt0"):
    for row in an.spurious_branch_probe(pair, meshes):
        print(f"{pair:6s} {row['mesh']:11s} dimV-dimE {row['dimV_minus_dimE']:3d}"
              f"  ker PvPe {row['kernel_PVPE']:3d}  ker PePv {row['kernel_PEPV']:3d}  {row['verdict']}")
