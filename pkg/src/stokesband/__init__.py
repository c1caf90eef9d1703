"""Spectral laboratory for wall-bounded Stokes flow with horizontally
band-limited forcing: elementary one-dimensional solvers, half-space and
strip compositions, interpolation-type norms, kernel bound verification,
and an ensemble experiment harness."""

from .grids import TimeGrid, VerticalGrid, diff1, diff2
from .spectral import (BandSpec, SpectralField, WavenumberLattice,
                       apply_multiplier, band_project, build_lattice,
                       field_l1, from_physical, relative_l1, to_physical,
                       zero_field)
from .elementary import (ModeProblem, solve_frac_backward, solve_frac_forward,
                         solve_heat_dirichlet, solve_heat_neumann,
                         split_heat_solution)
from .halfspace import (CompositionTrace, FlowState, check_irrotational,
                        recover_pressure, solve_halfspace)
from .strip import (CutoffProfile, LocalizedData, build_cutoff,
                    consistency_check, localize, mirror_strip, solve_strip)
from .norms import (KDecomposition, LOWER_NORM, NormKind, STRIP_NORM,
                    UPPER_NORM, fiber_k_functional, interpolation_norm,
                    lhs_norm_suite, singular_weights)
from .kernels import (InequalityReport, heat_kernel, poisson_extension,
                      verify_bandedness_lemma, verify_heat_kernel_bounds,
                      verify_kbar_bound, verify_min_integral,
                      verify_poisson_derivative_bound)
from .harness import (EnsembleSpec, ExperimentConfig, emit_reports,
                      random_forcing, run_consistency, run_convergence,
                      run_kernel_suite, run_mre_experiment,
                      run_proposition_checks)

__version__ = "0.1.0"
