"""Invariant tori bifurcating from periodic orbits of a planar Hamiltonian system.

The usual pipeline is ``scan_roots`` -> ``assess_admissibility`` ->
``build_surface`` -> ``surface_residual``; ``torusgen.cli`` wraps it.
"""
__version__ = "0.1.0"

from ._backend import BACKEND, available_backends
from .averaging import AveragedCoefficients, averaged_coefficients, solve_small_divisor
from .bifurcation import (AdmissibleResult, GeneratingScan, assess_admissibility,
                          generating_value_direct, generating_value_series, refine_root,
                          scan_roots, siegel_check)
from .errors import (AccuracyError, ConfigError, DissipativityError, DomainError,
                     EscapeError, MonotonicityUnavailable, NotClosedError, PreconditionError,
                     SmallDivisorError, TorusgenError)
from .model import (ALL_CLASSES, EQUILIBRIA, ExtremalConstants, OrbitClass, OrbitSpec,
                    SystemConfig, class_interval, extremal_constants, lemma1_bounds,
                    make_orbit_spec, orbit_interval)
from .monotonicity import alpha_profile, lemma1_verify
from .orbit import ParametrizedOrbit, ToleranceOpts, integrate_orbit, orbit_for, period_quadrature
from .perturbation import Perturbation, example_s6, monomial, slice_functions
from .surface import SurfaceExpansion, build_surface, surface_mesh, torus_point, upsilon_first_order
from .verify import VerificationReport, integrate_perturbed, run_example_s6, surface_residual
