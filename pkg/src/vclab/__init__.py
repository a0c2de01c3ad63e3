"""Numerical laboratory for polygonal point-vortex crystals."""

from vclab.core import DomainError, biot_savart_kernel, conjugate_pair_sum, kernel_jacobian
from vclab.crystal import (
    CrystalSpec,
    RelativeEquilibrium,
    build_crystal,
    central_gamma_closed,
    central_gamma_sum,
    relative_equilibrium_velocity,
    strain_profile,
    strain_tensor,
)
from vclab.dynamics import (
    CollapseError,
    VortexConfiguration,
    gradient_h,
    hamiltonian,
    impulses,
    integrate,
    pvs_velocity,
    run_perturbed_crystal,
)
from vclab.stability import (
    cabral_schmidt_range,
    hessian_h,
    linearization,
    restricted_spectrum,
    stability_matrix,
    subspace_split,
)

__version__ = "0.1.0"
