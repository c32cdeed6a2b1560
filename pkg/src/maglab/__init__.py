"""maglab: a desk-scale laboratory for magnetic Schrodinger/wave dynamics.

Verifies, on periodic grids, the exact structures behind weak dispersive
estimates for H = -(grad - iA)^2 + V: virial identities driven by the
commutator [H, T] with T = -[H, phi], local-smoothing functionals, weighted
radial-decay certificates, the magnetic Hardy ratio and Strichartz-norm
plumbing for the wave flow.
"""

from .grids import Field, GridSpec, WaveState, read_field, write_field
from .potentials import (
    PotentialSpec,
    FieldMatrixSample,
    builtin_potential,
    eval_B,
    gauge_residual,
)
from .decay import Certificate, RadialQuadrature, certify, optimize_M, triple_norm
from .multipliers import (
    PlateauWeight,
    RadialMultiplier,
    builtin_multiplier,
    hessian_form,
    make_abs,
    make_morawetz_3d,
    make_perturbed_nd,
    make_plateau,
    make_variance,
)
from .operators import SampledPotential, apply_H, magnetic_gradient, split_radial_tangential
from .engine import DistortedNormEngine
from .propagators import EvolutionConfig, Trajectory, duhamel_free_wave, evolve_schrodinger, evolve_wave
from .functionals import (
    SmoothingReport,
    StrichartzReport,
    VirialTrace,
    dyadic_source_sum,
    hardy_ratio,
    smoothing_report,
    strichartz_norm,
    virial_trace_schrodinger,
    virial_trace_wave,
    wave_admissible,
)

__version__ = "0.1.0"
