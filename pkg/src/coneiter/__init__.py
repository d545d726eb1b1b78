"""coneiter: a fixed-point iteration laboratory for cone b,p-normed spaces.

Builds traces of inertial relaxation schemes, checks the step-bound
inequalities that drive their convergence analysis along those traces,
probes operator-class conditions on random samples, and regenerates the
reference tables and figures of the worked examples.
"""

from .analysis import (BoundEval, CheckItem, CheckResult,
                       ConvergenceCertificate, StepBound, ValidationReport,
                       averaging_check, cauchy_certificate, check_step_bound,
                       coincidence_factor, step_coefficients,
                       theorem1_preconditions, validate_coincidence,
                       validate_weak_q, weak_q)
from .cone_space import (AxiomCheck, AxiomReport, ConeBpSpace, ConeValue,
                         builtin_r2_matrix, builtin_scalar_p, check_axioms,
                         scalarize)
from .errors import (ConeIterError, ConfigurationError, DivergenceError,
                     InversionError, MissingAuxError, PreconditionError)
from .harness import (ComparisonTable, ExperimentConfig, ExperimentResult,
                      build_operator, build_pair, build_space, load_config,
                      run_experiment)
from .iterate import (ErrorSequences, IterationConfig, Schedule, StepRecord,
                      StopRule, Trace, run_coincidence, run_inertial_km,
                      run_km, run_multi_inertial, trace_from_json,
                      trace_to_csv, trace_to_json)
from .operators import (CompatiblePairSpec, OperatorSpec, ProbeReport,
                        QuasiNonexpansiveWitness, Violation,
                        WeakContractionConsts, builtin_linear,
                        builtin_saturating, compat_pair_identity,
                        compat_pair_shared_linear, identity_map,
                        probe_compat, probe_quasi_nonexpansive,
                        probe_weak_contraction)
from .registry import EXPERIMENTS, REFERENCE_TABLES, experiment

__version__ = "0.1.0"
