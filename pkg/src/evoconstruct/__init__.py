"""Construction search for extremal problems: evaluators, evolution, certification."""

from .certify import ScoreInterval, certify, certify_with_instance
from .engine import (Archive, CandidateRecord, ExperimentConfig, RunReport,
                     admit, run_experiment, score_generalizer_candidate,
                     score_search_candidate)
from .payloads import Construction, payload_from_json, payload_to_json
from .registry import get_problem, problem_names
from .strategies import StrategyConfig, mutate_strategy, run_strategy

__version__ = "0.1.0"

__all__ = [
    "Archive", "CandidateRecord", "Construction", "ExperimentConfig",
    "RunReport", "ScoreInterval", "StrategyConfig", "admit", "certify",
    "certify_with_instance", "get_problem", "mutate_strategy",
    "payload_from_json", "payload_to_json", "problem_names", "run_experiment",
    "run_strategy", "score_generalizer_candidate", "score_search_candidate",
]
