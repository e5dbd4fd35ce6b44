"""Direct data-driven synthesis of event-triggered gain-scheduled controllers
for perturbed LPV systems: excitation experiments, persistence-of-excitation
checks, LMI feasibility programs solved at scheduling-polytope vertices, and
event-triggered closed-loop simulation for stabilization and tracking."""

from .lpv_core import (AffineMatrixFunction, LpvSystem, SchedulingBox,
                       SimulationTrace, eval_affine, hankel, lift_state,
                       simulate, spectral_radius, step, vertices)
from .data_engine import (ExperimentData, RegressorMatrices, collect, identify,
                          min_data_length, regressor_rank, theta_pe_margin)
from .sdp_interface import AffineMatrixExpression, Program, Solution, VariableHandle
from .stabilization_synthesis import (FQuad, ScriptF, SynthesisConfig,
                                      SynthesisSolution, build_certificate_program,
                                      build_fq, build_synthesis_program, eval_F,
                                      iss_constants, recover_gains, solve_synthesis,
                                      verify_closed_loop)
from .event_trigger import (TriggerConfig, build_trigger_program, compute_nu,
                            extract_input_matrix, inter_event_stats,
                            iss_practical_constant, practical_decrease_check,
                            simulate_event_triggered, solve_trigger, trigger_fire)
from .tracking import (AugmentedSystem, ReferenceSignal, augment_system,
                       build_tracking_synthesis_program,
                       build_tracking_trigger_program, collect_aug, make_reference,
                       min_data_length_aug, simulate_tracking_event_triggered,
                       tracking_error_stats)

__version__ = "0.1.0"
