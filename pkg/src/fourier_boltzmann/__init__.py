"""Characteristic-function toolkit for the homogeneous Boltzmann equation with Maxwellian molecules.

Angular kernels and their rate constants, Fourier-side norms and classification,
a Duhamel/Picard spectral solver, Povzner-type moment checks and a particle
Monte Carlo oracle.
"""
from .bobylev import (SolveConfig, collision_gn, contraction_schedule, cutoff_limit, duhamel_step,
                      evolve, stability_experiment)
from .charfun import (AnalyticCharFn, RadialCharFn, RadialGrid, classify, dirac_pair, dis_distance,
                      gaussian, knorm, knorm_diff, mean_obstruction, mixture, mnorm_re, parse_family,
                      point_mass, shifted_dirac, stable)
from .dsmc import (ParticleEnsemble, empirical_charfn, moment_propagation_experiment, nanbu_step,
                   run_dsmc, sample_initial)
from .errors import (BoundViolation, ClassificationError, ConfigError, DivergenceError, DomainError,
                     NumericError, UnsupportedError)
from .kernel import AngularKernel, lambda_limit, rate_constants
from .moments import laplacian_lift, levy_constant, moment_from_charfn, second_moment
from .povzner import post_collision, povzner_check, povzner_split

__version__ = "0.1.0"
