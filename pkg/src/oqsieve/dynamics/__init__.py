"""Master-equation generators, superoperator tools and propagators."""
from .generators import (GridGenerator, cl_dissipator_fock, cl_friction, dissipator, fock_generator,
                         free_rhs_fock, qome_lindblad, qome_rhs, qome_rhs_opposite_squeeze)
from .propagate import (PropagationResult, check_fock_step, check_grid_step, propagate_fock, propagate_grid,
                        rk4_step)
from .superop import (CPCheck, Superoperator, average_generator, build_superoperator, cp_check,
                      hamiltonian_superoperator, unvec, vec)
from .qome_fit import QOMEFit, fit_qome_form, qome_structures
