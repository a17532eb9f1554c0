"""Simulation of a quadrotor with a two-link arm and a bistable band gripper,
tracked by a model-free adaptive sliding controller."""

from .controller import (AdaptiveGains, BaselineSmcConfig, ControllerConfig, TrackingError,
                         baseline_smc_step, control_law, gain_rate, proposed_controller_step,
                         sliding_variable, tracking_error, uncertainty_gain_rho)
from .dynamics import (SystemState, UamParams, coriolis_matrix, end_effector, forward_dynamics,
                       gravity_vector, mass_matrix, rotation_matrix, step_rk4, thrust_allocation)
from .gripper import (BandState, GripperModel, GripperState, activation_time,
                      effective_trigger_force, gripper_update, open_gripper)
from .simkernel import (RunTrace, SimTruthBounds, UubReport, lyapunov_value, rms, run,
                        sim_truth_bounds, uub_certify)
from .trajectory import (DesiredPoint, ScenarioSpec, build_scenario, build_scenario1,
                         build_scenario2, disturbance_eval, quintic_eval)

__version__ = "0.1.0"
