"""Transient RC thermal model of a 3D memory stack and thermal-cage attack planning."""

from .attack import (AttackEntry, AttackPlan, CageParams, LateralSet, plan_cage, plan_to_pulses,
                     propagation_delay, refine_offsets)
from .errors import (DomainError, MeasurementError, ModelError, NumericalError, OracleError,
                     PlanningError, ThermocageError, ValidationError)
from .geometry import BankCoord, Link, StackGeometry, coord_of, linear_index, neighbors
from .network import MaterialParams, ThermalNetwork, build_network, pairwise_flux
from .power import (PowerTrace, PulseSpec, WorkloadSpec, benign_workload, compile_pulses,
                    superpose, total_energy)
from .solver import (SolverConfig, TemperatureTrace, reference_simulate, simulate, steady_state,
                     step)
from .telemetry import (Grouping, ImpactReport, SensorModel, SensorTrace, ThrottlePolicy,
                        baseline_stats, read_sensors, stealth_score, victim_impact)

__version__ = "0.1.0"
