"""dosepref: preference-weighted composite outcomes and optimal continuous
dosing estimated from observed treatment assignments.

The pipeline fits two conditional-mean outcome surfaces, estimates the
preference weight parameters and the assignment-optimality parameter by
maximum pseudo-likelihood, performs asymptotic Wald inference, and emits
optimal-dose policies.  See the README for CLI usage.
"""

from ._kernels import BACKEND_NAME as kernel_backend
from .basis import BasisSpec, build_design, default_basis
from .clinical import FractionPlan, bed, mld, total_dose, utility_score
from .density import ConditionalDensity, conditional_moments, density_at, sample_dose
from .inference import (InferenceDeclinedError, InferenceResult, b_matrix,
                        make_inference, wald, weight_ci)
from .likelihood import (EstimateResult, EstimationError, FitConfig, KernelData,
                         fit, hessian, loglik, score)
from .model import (CompositeSurface, DoseGrid, OutcomeSurface, PreferenceModel,
                    Sample, composite_eval, contrast_eval, expit, logit, weight,
                    weight_grad)
from .policy import (Policy, PolicyKind, optimal_dose, optimal_doses,
                     value_observed, value_under_policy)
from .regression import FitDiagnostics, RankDeficiencyError, fit_surface
from .simulation import (Scenario, ReplicationResult, StudyTables,
                         generate_dataset, run_replication, run_study)

__version__ = "0.1.0"
