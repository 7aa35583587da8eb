"""Identify, rank, and engage likely information propagators.

Given candidate users with profiles and message timelines, the package
predicts each user's likelihood of reposting a requested message, estimates
the probability they act within a deadline, and recommends the top-N
candidates. A synthetic-population simulator supplies ground truth for
desk-scale strategy experiments, and an event-sourced campaign service
drives live engagement through an HTTP API.
"""

from .classify import ModelSpec, TrainedModel, load_model, save_model, train
from .corpus import (
    LabeledDataset,
    Message,
    UserRecord,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .features import FeatureExtractor, FeatureVector
from .metrics import EvalReport, auc, evaluate, f1
from .personality import Lexicon, TraitMapping, load_lexicon, load_trait_mapping, tokenize
from .preprocess import chi_squared_scores, class_weights, smote
from .recommend import ContactOutcome, ScoredCandidate, rank_candidates, retweeting_rate, unit_info_reach
from .simulate import PopulationConfig, StrategySpec, behavior_oracle, generate_population, run_strategy
from .waittime import WaitTimeModel, fit_wait_time, passes_cutoff, prob_within

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "ContactOutcome",
    "FeatureExtractor",
    "FeatureVector",
    "LabeledDataset",
    "Lexicon",
    "Message",
    "ModelSpec",
    "PopulationConfig",
    "ScoredCandidate",
    "StrategySpec",
    "TrainedModel",
    "TraitMapping",
    "UserRecord",
    "WaitTimeModel",
    "auc",
    "behavior_oracle",
    "chi_squared_scores",
    "class_weights",
    "evaluate",
    "f1",
    "fit_wait_time",
    "generate_population",
    "load_dataset",
    "load_lexicon",
    "load_model",
    "load_trait_mapping",
    "passes_cutoff",
    "prob_within",
    "rank_candidates",
    "retweeting_rate",
    "run_strategy",
    "save_dataset",
    "save_model",
    "smote",
    "stratified_split",
    "tokenize",
    "train",
    "unit_info_reach",
]
