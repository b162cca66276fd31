"""Maximum-entropy estimation of correlated-equilibrium behavior.

Observed joint play in a multi-agent game is rationalized as the
highest-entropy distribution whose incentive to deviate is no larger than
the demonstrated behavior's, deviation by deviation.  The package bundles
the vector-utility game model, deviation sets and regret computations,
equilibrium generators for synthetic behavior, the single-game and
game-family estimators, strategy-blind baselines, two reference scenarios,
and an experiment harness with a CLI.
"""
from .baselines import (
    MultinomialBaseline,
    OutcomeLogit,
    PerPlayerIOC,
    cross_entropy_bits,
    log_loss,
)
from .conditional import (
    ConditionalMaxEntICE,
    FamilyDemos,
    GameFamily,
    conditional_entropy,
    transfer_predict,
)
from .deviations import (
    Deviation,
    DeviationSet,
    build_deviation_set,
    composite,
    expected_regret_features,
    fixed,
    instantaneous_regret_features,
    max_regret,
    regret_value,
    switch,
)
from .equilibrium import (
    DemoSet,
    EquilibriumReport,
    empirical,
    regret_matching_ce,
    sample_demos,
    welfare_tilted_ce,
)
from .errors import (
    DeviationSetTooLargeError,
    DimensionMismatchError,
    InfiniteLossError,
    InvalidOutcomeError,
    NotConvergedError,
    ValidationError,
)
from .estimator import (
    DualWeights,
    FitResult,
    MaxEntICE,
    dual_gradient,
    dual_objective,
    ice_feasibility_gap,
    predict_from_weights,
)
from .game import Game, check_strategy, entropy, outcome_index, uniform_strategy
from .harness import (
    BoundCheckConfig,
    ExperimentConfig,
    check_sample_bounds,
    emit,
    required_samples,
    run_sweep,
    run_transfer,
)
from .scenarios import (
    ROUTING_VARIANTS,
    MarketEntryConfig,
    RoutingConfig,
    build_market_entry_family,
    build_routing_game,
    build_routing_variant,
)

__version__ = "0.1.0"
