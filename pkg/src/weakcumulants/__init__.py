"""Sequential weak measurement simulator and cumulant-theorem verification harness."""

from .errors import DegeneratePostselectionError, SingularEtaError, SizeError
from .partitions import (MomentFunctional, Partition, all_subsets, covariance, cumulant, cumulant_coefficient,
                         cumulant_table, enumerate_partitions, is_independent, moments_from_cumulants)
from .quantum import (EvolutionChain, Observable, SystemState, UnitaryOp, is_weakly_independent,
                      path_amplitude_ratio, power_weak_value, sequential_weak_value, simultaneous_weak_value,
                      weak_value, weak_value_cumulant, weak_value_functional)
from .pointer import (DEFAULT_GRID, P, Q, MomentSet, PointerGrid, PointerObservable, PointerWavefunction, eta,
                      load_wavefunction_csv, make_operator, moment, moment_set, save_wavefunction_csv,
                      theta_factor, uv_coefficients, uv_tables, varpi_factor, xi_factor)
from .engine import (Experiment, JointPointerState, PointerConfig, expectation_product,
                     expectation_product_complex, pointer_covariance, pointer_cumulant, pointer_moments,
                     run_exact, run_perturbative, run_simultaneous_exact, run_trotter_simultaneous)
from .scenarios import (SCENARIOS, ScenarioDescriptor, bottleneck_double_pair, bottleneck_interferometer,
                        double_interferometer, get_scenario, pointer_family, random_chain)
from .harness import (LoweringOperator, VerificationReport, WeakValueBundle, appendix_cumulant_identity,
                      appendix_oracle_q, appendix_oracle_q1q2, covariance_counterexample, heisenberg_check,
                      reports_to_json, verify_appendix_oracle, verify_cumulant_theorem, verify_lowering, verify_n1)

__version__ = "0.1.0"
