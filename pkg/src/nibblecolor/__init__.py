"""Nibble-method edge coloring: offline, random-order online, and dynamic
low-recourse algorithms, with instance generators and a statistical
verification harness."""

from .graph import (Graph, EdgeColoring, VerifyReport, verify_proper_coloring,
                    max_degree, NULL_COLOR, GraphError, SelfLoop,
                    DuplicateEdge, MissingEdge, DegreeBoundExceeded)
from .nibble import (Params, derive_params, InvalidEpsilon, DegreeOutOfRange,
                     run_phase_one, run_phase_two, run_basic)
from .random_order import (binomial_prefix_partition, run_warmup, run_general,
                           WarmupColorer, StreamLengthMismatch)
from .dynamic import (DynamicColorer, RoundAssignment, assign_round,
                      tentatively_color, SimpleColor, RegularizingGadget,
                      gadget_wrap, GadgetExhausted, capped_geo_pmf,
                      recourse_stats)
from .generators import (greedy_online, gen_near_regular,
                         gen_random_order_stream, gen_update_sequence,
                         gen_lower_bound_instance, LowerBoundParams,
                         InfeasibleParams, ResourceLimit)
from .harness import (ExperimentConfig, run_experiment, verify_events,
                      tv_distance_test, replay_validate, EventReport,
                      ConfigError, EmptySamples)

__version__ = "0.1.0"
