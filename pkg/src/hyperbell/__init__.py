"""Hyper-entangled two-photon Bell test toolkit.

Exact quantum predictions, exhaustively enumerated classical bounds, and a
seeded Monte-Carlo reproduction of the polarization-path experiment,
including the exponential growth of the violation with the number of
entangled degrees of freedom.
"""

from .bell import (
    BellOperator,
    ScalingReport,
    build_beta_k,
    build_beta_pi,
    build_beta_product,
    canonical_product,
    ideal_predictions,
    ideal_state,
    quantum_value,
    scaling_report,
)
from .lhv import (
    FACTORIZABLE,
    UNRESTRICTED,
    BoundResult,
    LhvStrategy,
    evaluate_strategy,
    factorizable_chsh_lemma_check,
    max_bound,
)
from .model import (
    NoiseModel,
    ObservableId,
    QuantumState,
    apply_noise,
    basis_conventions,
    hyper_state,
    local_setting_operator,
    observable,
)
from .rng import GENERATOR_ID
from .simlab import (
    CorrelationRecord,
    JointSetting,
    ViolationReport,
    assumption_test,
    bell_test_settings,
    born_distribution,
    estimate,
    reference_significance,
    run_simulated_experiment,
    sample,
    signaling_deviation,
    violation_report,
)

__version__ = "0.1.0"
