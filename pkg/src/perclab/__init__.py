"""perclab: critical site percolation on the triangular lattice.

Monte-Carlo sampling, cluster geometry and metrics (geodesic, resistance,
path-diameter brackets), arm events and exponents, normalizing quantiles,
cluster measures, random walks on clusters, and Gromov-Hausdorff
diagnostics, with a reproducible experiment harness.
"""

__version__ = "0.1.0"

from .lattice import (Annulus, Box, TriCoord, annulus_membership,
                      boundary_sites, euclid, lambda_box, neighbors)
from .config import Configuration, read_config, sample, write_config
from .clusters import ClusterLabeling, has_crossing, label_clusters
from .interfaces import InterfaceLoop, trace_interfaces
from .arms import (ArmCount, ArmQuery, count_disjoint_monochromatic,
                   estimate_arm_probability, find_pivotals,
                   has_alternating_arms)
from .metrics import MetricSample, geodesic_distance, path_metric_bracket, rescale
from .resistance import (ResistanceProblem, effective_resistance,
                         effective_resistance_exact, pairwise_resistance_fill)
from .normalizer import (EventEReport, QuantileEstimate, compute_Xn,
                         detect_event_E, estimate_qn)
from .measures import AtomicMeasure, annulus_measure, box_count_Yk, cluster_measure
from .walk import (WalkEnvironment, WalkStats, expected_exit_time,
                   return_probability_series, sample_iic_environment,
                   simulate_walk_paths, vsrw_rate)
from .ghtool import (FiniteMetricSpace, gh_exact_small, gh_upper_by_embedding,
                     measure_discrepancy)
from .harness import ExperimentPlan, ExponentFit, fit_exponent, run
