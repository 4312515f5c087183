"""Binary classifiers, metrics and repeated cross-validation."""

from .boost import AdaBoost
from .forest import ImportanceResult, RandomForest, oob_importance
from .metrics import Evaluation, auc, evaluate, rates
from .model_selection import CLASSIFIERS, CVReport, cross_validate, make_classifier, stratified_folds
from .naive_bayes import GaussianNaiveBayes
from .serialize import dumps, loads, model_from_dict, model_to_dict
from .svm import SMOClassifier, rbf_kernel, smo
from .tree import DecisionTree, grow_tree

__all__ = [
    "AdaBoost", "CLASSIFIERS", "CVReport", "DecisionTree", "Evaluation", "GaussianNaiveBayes",
    "ImportanceResult", "RandomForest", "SMOClassifier", "auc", "cross_validate", "dumps",
    "evaluate", "grow_tree", "loads", "make_classifier", "model_from_dict", "model_to_dict",
    "oob_importance", "rates", "rbf_kernel", "smo", "stratified_folds",
]
