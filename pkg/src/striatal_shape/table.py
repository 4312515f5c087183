"""Feature table CSV files and their JSON provenance sidecars."""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .exceptions import BadRow, DuplicateSubject, MissingHeader
from .features import FEATURE_LAYOUT_VERSION, FEATURE_NAMES, IMAGE_FEATURES, SBR_FEATURES
from .volume_io import LABELS


def format_float(v):
    """17 significant digits: enough to reproduce any double exactly."""
    return format(float(v), ".17g")


@dataclass
class FeatureTable:
    """Feature rows keyed by subject, columns in the fixed layout order.

    ``columns`` is any subset of the 34 feature names, kept in layout
    order; extraction writes the 30 image features or all 34.
    """

    subject_ids: List[str]
    labels: List[str]
    values: np.ndarray
    columns: List[str] = field(default_factory=lambda: list(IMAGE_FEATURES))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.subject_ids), -1)
        if self.values.shape[1] != len(self.columns):
            raise ValueError("column names and values disagree")
        self.columns = list(self.columns)
        if not _in_layout_order(self.columns):
            raise ValueError("columns must be distinct feature names in layout order")
        if np.isnan(self.values).any():
            raise ValueError("feature table contains NaN")

    def __len__(self):
        return len(self.subject_ids)

    @property
    def has_sbr(self):
        return all(c in self.columns for c in SBR_FEATURES)

    def column(self, name):
        return self.values[:, self.columns.index(name)]

    def select(self, names):
        return self.values[:, [self.columns.index(n) for n in names]]

    def deficit_labels(self):
        """1 for PD (dopaminergic deficit), 0 for Normal and SWEDD."""
        return np.array([1 if lab == "PD" else 0 for lab in self.labels])

    def equals(self, other):
        return (self.subject_ids == other.subject_ids and self.labels == other.labels
                and list(self.columns) == list(other.columns)
                and np.array_equal(self.values, other.values))


def _in_layout_order(columns):
    if not columns or any(c not in FEATURE_NAMES for c in columns):
        return False
    pos = [FEATURE_NAMES.index(c) for c in columns]
    return all(a < b for a, b in zip(pos, pos[1:]))


def write_feature_table(table, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "label", *table.columns])
        for sid, lab, row in zip(table.subject_ids, table.labels, table.values):
            w.writerow([sid, lab, *map(format_float, row)])


def read_feature_table(path) -> FeatureTable:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["subject_id", "label"]:
            raise MissingHeader(f"{path}: expected subject_id,label,... header")
        columns = header[2:]
        if not _in_layout_order(columns):
            raise MissingHeader(f"{path}: feature columns do not follow the fixed layout")
        ids, labels, rows, seen = [], [], [], set()
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise BadRow(i, f"expected {len(header)} fields, got {len(rec)}")
            sid, lab = rec[0], rec[1]
            if sid in seen:
                raise DuplicateSubject(f"{path}: subject {sid!r} listed twice")
            seen.add(sid)
            if lab not in LABELS:
                raise BadRow(i, f"unknown label {lab!r}")
            try:
                vals = [float(v) for v in rec[2:]]
            except ValueError:
                raise BadRow(i, "non-numeric feature value") from None
            if not np.all(np.isfinite(vals)):
                raise BadRow(i, "non-finite feature value")
            ids.append(sid)
            labels.append(lab)
            rows.append(vals)
    return FeatureTable(ids, labels, np.array(rows).reshape(len(ids), len(columns)), columns)


def config_hash(config):
    """SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def provenance(config, subjects=None, failures=None, seed: Optional[int] = None):
    """Sidecar naming the code version, config hash and per-subject thresholds."""
    return {
        "code_version": __version__,
        "feature_layout_version": FEATURE_LAYOUT_VERSION,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "subjects": subjects or [],
        "failures": failures or [],
    }


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


__all__ = ["FeatureTable", "SBR_FEATURES", "config_hash", "format_float", "provenance",
           "read_feature_table", "write_feature_table", "write_json"]
