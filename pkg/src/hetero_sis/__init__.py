"""Heterogeneous multi-profile SIS epidemics: simulation and fixed-point analysis."""

__version__ = "0.1.0"

from .graph import (DegreeProfile, EdgeListError, Graph, GraphError, degrees, gen_clique, gen_erdos_renyi,
                    gen_powerlaw, load_edge_list)
from .profiles import (Profile, ProfileError, ProfileMap, ProfileParams, SystemMatrices, assign_by_attribute,
                       assign_random_split, build_matrices)
from .clique import (CliqueError, CliqueState, CliqueSystem, NotAFixedPoint, StabilityVerdict, analyze_at,
                     analyze_full, analyze_mixed, analyze_zero, clique_jacobian, clique_rhs,
                     derive_rates_full_infection, derive_rates_mixed, discriminant_zero_fp)
from .spectral import (NotConverged, SparseNonneg, SpectralError, SpectralResult, is_irreducible,
                       spectral_abscissa_metzler, spectral_radius)
from .meanfield import (BoundsQuery, BoundsReport, FixedPointNotConverged, MeanFieldError, MeanFieldState,
                        ZeroStabilityReport, fixed_point_residual, flood_bounds, mf_fixed_point, mf_integrate,
                        mf_jacobian, mf_rhs, mixed_bounds, pf_fixed_point, zero_stability)
from .simulation import (SeedSpec, SimConfig, SimResult, SimTrace, SimulationError, compare_to_meanfield, run,
                         step)
