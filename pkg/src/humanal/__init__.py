"""Calibrate binary crowd matching labels from each annotator's behavioral profile."""

from .core import (AnnotationCorpus, AnnotatorMeta, Decision, GroundTruthEntry, SummaryStats,
                   Violation, corpus_stats, join_ground_truth, validate_corpus)
from .errors import (ConfigError, DegenerateTrainingSet, DomainError, HumanALError,
                     InsufficientPopulation, MaskMismatch, MissingTruth, ParseError)
from .features import (ABSENT, FEATURE_SETS, SLOTS, FeatureMask, FeatureMatrix, FeatureVector,
                       build_profile, featurize_corpus, smoothed_confidence)
from .harness import (EvalReport, SplitSetting, ablation, accuracy, make_split,
                      run_experiment, summarize)
from .pipeline import CalibrationRun, baseline_labels, calibrate, majority_vote_labels
from .simulator import (SimConfig, SimTruth, bayes_oracle_accuracy, generate_corpus,
                        verify_targets)
from .zoo import (DEFAULT_POOL, AdaBoostStumps, DecisionTree, GaussianNB, KNN, LogisticSGD,
                  RandomForest, TrainedModel, fit, predict, predict_proba, select_model)

__version__ = "0.1.0"
