"""Numerical laboratory for circle rotations driving Heisenberg skew products."""

from .complexity import (AdjacencyReport, ComplexityReport, CoverResult,
                         LipschitzReport, TrendReport, adjacency_check,
                         complexity_report, dbar, greedy_cover, grid_count,
                         grid_points, lipschitz_probe, mesh_scale,
                         subpoly_trend)
from .config import (load_config, parse_alpha, parse_fn, parse_system,
                     write_csv, write_json)
from .dynamics import (BirkhoffSums, SkewSystem, birkhoff_sums,
                       conjugated_iterate, conjugated_step, conjugation,
                       conjugation_inv, coupling_quadratic_coeffs,
                       coupling_sum_direct, direct_cocycle_sums,
                       geometric_sum, iterate, make_system,
                       rational_birkhoff_sum, step, triangle_sum_diag,
                       triangle_sum_offdiag)
from .errors import (CapacityError, ConfigError, GridResolutionError,
                     LabError, PrecisionExhausted, SearchRangeError,
                     SmallDivisorError)
from .heisenberg import (HeisElt, NilPoint, PhasePoint, centered_coords,
                         dist_explicit_bound, dist_nil_upper, dist_phase,
                         inv, mul, nil_equal)
from .numtheory import (IndexSets, MobiusTable, RotationNumber,
                        check_best_approx, classify_index_sets,
                        dirichlet_search, expand_cf, mobius_sieve,
                        small_denominator_sums, window_weighted_sum)
from .oracles import OracleResult, run_checks
from .periodic import PeriodicFn, ResonantSplit, split_resonant
from .rigidity import (CharacterObservable, ConstantObservable,
                       CorrelationReport, DecayReport, DecayRow,
                       RigidityReport, ThetaObservable, decay_experiment,
                       drift_pairing, drift_pairing_limit, mean_square,
                       mobius_correlation, rigidity_integrals,
                       sigma_decomposition, sigma_linear_rate, sigma_residual,
                       wrapped_mean_square)

__version__ = "0.1.0"
