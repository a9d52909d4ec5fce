"""Offline fictitious self-play for two-player zero-sum extensive-form games."""

from .dataset import (
    GameDataset,
    PlayerDataset,
    coverage_report,
    empirical_behavior_policy,
    exact_proportion_dataset,
    load,
    make_rps_d1,
    make_rps_d2,
    project,
    sample_dataset,
    sample_mix_dataset,
    sample_population_dataset,
    save,
)
from .exceptions import (
    DatasetFormatError,
    DegenerateDatasetError,
    IllegalActionError,
    MissingInfostateError,
    OffFSPError,
    PreconditionError,
    ValidationError,
)
from .games import GAMES, make_game
from .off_fsp import AveragePolicyStore, OffFSPConfig, run_baseline, run_off_fsp
from .offline_rl import LearnerConfig, QTable, learn_bc, learn_best_response
from .policy import BehaviorPolicy, uniform_policy, uniform_profile
from .reweight import WeightedPlayerDataset, generate_data
from .solver import best_response, expected_value, fp_solve, nash_conv

__version__ = "0.1.0"
