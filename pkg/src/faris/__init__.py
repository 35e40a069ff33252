"""Ergodic-rate maximization for fluid-active reflecting surfaces.

Library layout:
  channel        correlated geometry, steering vectors, Rician sampling
  reformulation  per-selection quantities; direct and lifted rate evaluation
  active_reflect inner loop over the amplification-reflection vector
  port_select    cardinality-constrained cross-entropy port search
  ao_driver      outer alternation with a monotone-rate contract
  oracle         exhaustive baseline for tiny instances
  experiments    Monte-Carlo harness writing tidy CSV
  cli            `faris` command-line front end
"""

from .active_reflect import (InnerConfig, InnerState, extract_rank_one,
                             gaussian_randomization, init_v, inner_ao,
                             magnitude_project, power_scale,
                             solve_v_subproblem, surrogate_objective,
                             surrogate_values, update_y)
from .ao_driver import OuterConfig, OuterResult, channels_for_seed, run
from .channel import (ChannelSet, CorrelationModel, SurfaceGeometry,
                      SystemParams, build_channels, build_correlation,
                      element_distance, element_positions, los_bs_faris,
                      los_mu_steering, path_loss, sample_rician)
from .errors import (ConfigError, FarisError, NumericalError, ValidationError)
from .experiments import (ResultRow, Scenario, centered_selection, gap_cdf,
                          run_scenario)
from .oracle import BfsConfig, bfs, search_space_size
from .port_select import (CemConfig, EliteStats, ce_update, elite_mean,
                          elite_select, evaluate_sample, log_likelihood,
                          p_of_nu, run_cem, sample_activation, solve_nu)
from .reformulation import (PortSelection, PrecomputedQuantities,
                            SelectionEvaluator, build_selection, hermitize,
                            precompute, radiated_power, saa_rate, sinr_direct,
                            sinr_lifted)

__version__ = "0.1.0"
