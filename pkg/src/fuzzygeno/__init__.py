"""Two-pass fuzzy-genetic image classifier.

A genetic search picks row and column cuts of a 32x32 frame; fuzzy strip
memberships turn the cuts into cell features for a nearest-prototype
classifier. Classes the first pass confuses are grouped and re-decided by
second-pass classifiers that only look at the region where they differ.
"""
from .classifier import ConfusionMatrix, ModelSet, accuracy, build_models, classify, confusion
from .evolution import EvolutionTrace, GAConfig, evolve
from .grouping import GroupingConfig, GroupSpec, confusion_region, form_groups
from .imaging import FRAME, FULL_FRAME, DataError, LabeledSet, Rect, load_dataset, normalize
from .partitions import Chromosome, FuzzyParams, extract_features, membership_matrix, validate
from .pipeline import (ModelFormatError, TwoPassModel, classify_two_pass, evaluate, load_model, save_model,
                       train)

__all__ = [
    "Chromosome", "ConfusionMatrix", "DataError", "EvolutionTrace", "FRAME", "FULL_FRAME", "FuzzyParams",
    "GAConfig", "GroupSpec", "GroupingConfig", "LabeledSet", "ModelFormatError", "ModelSet", "Rect",
    "TwoPassModel", "accuracy", "build_models", "classify", "classify_two_pass", "confusion",
    "confusion_region", "evaluate", "evolve", "extract_features", "form_groups", "load_dataset",
    "load_model", "membership_matrix", "normalize", "save_model", "train", "validate",
]
