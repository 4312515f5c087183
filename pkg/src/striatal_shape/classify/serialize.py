"""Versioned JSON documents for fitted classifiers."""

import json

import numpy as np
from sklearn.preprocessing import StandardScaler

from .boost import AdaBoost
from .forest import RandomForest
from .naive_bayes import GaussianNaiveBayes
from .svm import SMOClassifier
from .tree import TreeArrays

FORMAT_VERSION = 1
_KINDS = {"svm": SMOClassifier, "gnb": GaussianNaiveBayes, "forest": RandomForest,
          "boost": AdaBoost}


def _scaler_dict(scaler):
    if scaler is None:
        return None
    return {"mean": scaler.mean_.tolist(), "scale": scaler.scale_.tolist()}


def _scaler_from(d):
    if d is None:
        return None
    s = StandardScaler()
    s.mean_ = np.array(d["mean"])
    s.scale_ = np.array(d["scale"])
    s.var_ = s.scale_ ** 2
    s.n_features_in_ = len(s.mean_)
    s.n_samples_seen_ = 0
    return s


def _params(model):
    return {k: v for k, v in model.get_params().items()
            if isinstance(v, (int, float, str, bool, type(None)))}


def model_to_dict(model):
    kind = next(k for k, cls in _KINDS.items() if type(model) is cls)
    doc = {
        "format": "striatal-shape-model",
        "version": FORMAT_VERSION,
        "kind": kind,
        "params": _params(model),
        "classes": model.classes_.tolist(),
        "n_features": int(model.n_features_in_),
    }
    if kind == "svm":
        doc.update(support_vectors=model.support_vectors_.tolist(),
                   dual_coef=model.dual_coef_.tolist(), intercept=model.intercept_,
                   scaler=_scaler_dict(model.scaler_))
    elif kind == "gnb":
        doc.update(theta=model.theta_.tolist(), var=model.var_.tolist(),
                   class_prior=model.class_prior_.tolist(), scaler=_scaler_dict(model.scaler_))
    elif kind == "forest":
        doc.update(trees=[t.to_dict() for t in model.trees_])
    else:
        doc.update(trees=[t.to_dict() for t in model.trees_], alphas=model.alphas_.tolist())
    return doc


def model_from_dict(doc):
    if doc.get("format") != "striatal-shape-model":
        raise ValueError("not a serialized model")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    kind = doc["kind"]
    model = _KINDS[kind](**doc["params"])
    model.classes_ = np.array(doc["classes"])
    model.n_features_in_ = doc["n_features"]
    if kind == "svm":
        model.support_vectors_ = np.array(doc["support_vectors"], dtype=np.float64).reshape(
            -1, model.n_features_in_)
        model.dual_coef_ = np.array(doc["dual_coef"], dtype=np.float64)
        model.intercept_ = float(doc["intercept"])
        model.scaler_ = _scaler_from(doc["scaler"])
    elif kind == "gnb":
        model.theta_ = np.array(doc["theta"])
        model.var_ = np.array(doc["var"])
        model.class_prior_ = np.array(doc["class_prior"])
        model.scaler_ = _scaler_from(doc["scaler"])
    else:
        model.trees_ = [TreeArrays.from_dict(t) for t in doc["trees"]]
        if kind == "boost":
            model.alphas_ = np.array(doc["alphas"])
            model.n_rounds_ = len(model.trees_)
    return model


def dumps(model):
    return json.dumps(model_to_dict(model))


def loads(text):
    return model_from_dict(json.loads(text))
