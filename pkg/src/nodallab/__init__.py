"""Nodal sets of Laplace eigenfunctions on flat model geometries."""
from .exceptions import NodalLabError
from .exponents import ExponentTable, exponent_table
from .fd import assemble_operator, solve_eigenpair, validate_against_catalog
from .harmonic import iteration_experiment, make_harmonic, mean_value_check
from .fitting import PowerLawRegressor, fit_power_law
from .geometry import (Ball, Domain, GridSpec, ScalarField, ball_volume, grid_for_wavelength,
                       make_domain, points_in_ball)
from .growth import GrowthRecord, df_bound_ratio, growth_beta, positivity_bound_record
from .modes import (EigenMode, enumerate_eigenvalues, evaluate, evaluate_gradient,
                    laplacian_residual, make_mode, make_random_wave, sample)
from .nodal import (BallPack, NodalMesh, extract_nodal_set, isoperimetric_constant, local_density,
                    nodal_measure_in_ball, pack_nodal_balls, sign_volumes)
from .norms import (dong_identity, grad_sup_ratio, holder_chain_check, l1_lower_check, lp_norm,
                    sobolev_exponent, sogge_delta, sogge_ratio)
from .sweep import SweepConfig, SweepReport, emit_report, run_sweep

__version__ = "0.1.0"
