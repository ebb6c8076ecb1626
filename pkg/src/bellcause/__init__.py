"""Bell-scenario phenomena, hidden-variable models, the local polytope, and
causal-principle checks on spacetime-embedded causal models."""

__version__ = "0.1.0"

from .causal import (
    CausalModel,
    EventKind,
    Principle,
    PrincipleVerdict,
    SpacetimeEvent,
    bell_dag,
    check_agent_causation,
    check_causal_arrow,
    check_common_causes,
    check_decorrelating_explanation,
    check_free_choice,
    check_local_agency,
    check_local_causality,
    check_locality_principle,
    check_no_fine_tuning,
    check_no_superdeterminism,
    check_predetermination_principle,
    check_reichenbach,
    check_relativistic_embedding,
    conditionally_independent,
    d_separated,
    in_past_lightcone,
    joint_distribution,
)
from .errors import BellCauseError
from .implications import check_implication, random_hv_model
from .polytope import (
    DeterministicStrategy,
    MembershipResult,
    determinize,
    enumerate_strategies,
    local_bound,
    membership,
    model_from_weights,
    strategy_phenomenon,
)
from .prob import HVModel, Phenomenon, Scenario, predicted_phenomenon, reproduces
from .properties import (
    Property,
    PropertyVerdict,
    is_local,
    is_locally_causal,
    is_predetermined,
    is_predictable,
    is_signal_local,
)
from .quantum import (
    BlochSetting,
    PureEnsemble,
    TwoQubitState,
    born_phenomenon,
    chsh_value,
    correlator,
    pure_ensemble_model,
    singlet,
    werner,
)
from .theorems import calibrate_local_model, reconcile, verify_lemma
