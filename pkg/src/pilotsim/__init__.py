"""Link-level simulator for covariance-based pilot reuse in multi-sector massive MIMO."""

__version__ = "0.1.0"

from .scenario import (ActiveSet, ConfigurationError, Scenario, SystemConfig,
                       UserRecord, build_scenario, load_system_config,
                       sample_active_set, sector_orientations)
from .channel import (AntennaPattern, CovarianceSet, analytic_covariance,
                      antenna_gain_db, array_response, compound_covariance,
                      covariance_set, path_gain, sample_channel,
                      sample_channel_block, sample_channel_matrix,
                      sample_covariance)
from .features import (CHART, CMD_ROW, POSITION, DissimilarityMatrix,
                       FeatureSet, chart_quality, cmd, cmd_feature,
                       dissimilarity_matrix, laplacian_eigenmaps,
                       position_feature)
from .assignment import (CopilotSets, PilotAssignment, assignment_objective,
                         brute_force_assignment, copilot_sets,
                         nearest_neighbor_assignment, random_assignment,
                         sgps_assignment)
from .phy import (BPSK, CONSTELLATIONS, QPSK, DetectionResult,
                  EstimationResult, PilotBook, build_pilot_book,
                  complex_noise, correlate, correlate_all, detect,
                  estimator_matrices, instantaneous_sinr, lmmse_combiner,
                  lmmse_estimate, pilot_rx, pilot_signal_matrix,
                  uplink_sinr_all)
from .harness import (AXES, METHODS, PERFECT_CSI, ExperimentPlan,
                      MetricsReport, MethodPointResult, achievable_rate,
                      apply_axis, derive_rng, emit_report, empirical_cdf,
                      load_plan, run_experiment, wilson_interval)
