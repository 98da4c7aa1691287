"""RFQ market-making simulator and PPO quoting agent."""

from .env import EnvConfig, RfqEnv, StepRecord, VecRfqEnv, descale_action, episode_return
from .intensity import (
    BASELINE_GENERATOR,
    NEG_BIAS_GENERATOR,
    POS_BIAS_GENERATOR,
    IntensityLevels,
    IntensityPath,
    IntensityState,
    random_initial_state,
    simulate_ctmc,
    stationary_distribution,
    validate_generator,
)
from .market import (
    FillCurve,
    PriceParams,
    StepOutcome,
    fill_probability,
    kappa_implied_price,
    price_step,
    sample_fills,
)
from .policy import (
    DistributionOut,
    PolicyParams,
    backward,
    forward,
    load_checkpoint,
    log_prob_and_entropy,
    save_checkpoint,
)
from .ppo import PpoConfig, RolloutBuffer, collect_rollouts, compute_gae, ppo_update, train
from .scenarios import (
    BatchStats,
    ExperimentPreset,
    evaluate_agent,
    price_drift_study,
    resolve_preset,
    symmetry_report,
)

__version__ = "0.1.0"
