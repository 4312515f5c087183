"""Group descriptives and Wilcoxon rank-sum screening of features."""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .exceptions import EmptyGroup, EmptySample
from .volume_io import LABELS

EXACT_MAX_TOTAL = 12


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # Mann-Whitney U of the first sample
    pvalue: float
    method: str  # "exact" or "normal"


def _exact_p(ranks_x, all_ranks):
    """Two-sided p from enumerating every split of ``all_ranks``."""
    n = len(ranks_x)
    observed = sum(ranks_x)
    sums = np.array([sum(c) for c in combinations(all_ranks, n)], dtype=np.float64)
    # rank sums are integers without ties, so exact comparison is safe
    lower = np.count_nonzero(sums <= observed) / len(sums)
    upper = np.count_nonzero(sums >= observed) / len(sums)
    return min(1.0, 2 * min(lower, upper))


def ranksum(x, y, method="auto") -> RankSumResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

    Midranks are used for ties.  With at most 12 observations in total and
    no ties the p-value is exact (full enumeration of rank assignments);
    otherwise the normal approximation with tie-corrected variance and a
    continuity correction of 1/2 is used.

    Parameters
    ----------
    x, y : array_like
    method : {"auto", "exact", "normal"}
        ``"exact"`` requires tie-free data; ``"normal"`` forces the
        approximation at any size.

    Returns
    -------
    RankSumResult
        ``statistic`` is ``U = R_x - n(n+1)/2``.
    """
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise EmptySample("both samples must be nonempty")
    n, m = x.size, y.size
    ranks = rankdata(np.concatenate([x, y]))
    r_x = float(ranks[:n].sum())
    u = r_x - n * (n + 1) / 2
    ties = len(np.unique(ranks)) < n + m

    if method == "exact" and ties:
        raise ValueError("exact p-values need tie-free samples")
    if method == "exact" or (method == "auto" and n + m <= EXACT_MAX_TOTAL and not ties):
        return RankSumResult(u, _exact_p(ranks[:n].tolist(), ranks.tolist()), "exact")

    N = n + m
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts))
    var = n * m / 12 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return RankSumResult(u, 1.0, "normal")
    # symmetric in x and y: |U - nm/2| is the same from either side
    z = max(0.0, abs(u - n * m / 2) - 0.5) / math.sqrt(var)
    return RankSumResult(u, float(min(1.0, 2 * ndtr(-z))), "normal")


@dataclass
class FeatureStats:
    name: str
    mean: Dict[str, float]
    sd: Dict[str, float]
    p1: float
    p2: float


@dataclass
class GroupSummary:
    features: List[FeatureStats]
    counts: Dict[str, int]

    @property
    def names(self):
        return [f.name for f in self.features]

    def p2(self):
        return np.array([f.p2 for f in self.features])

    def to_rows(self):
        rows = []
        for i, f in enumerate(self.features, 1):
            row = {"number": i, "feature": f.name}
            for g in LABELS:
                row[f"{g}_mean"] = f.mean[g]
                row[f"{g}_sd"] = f.sd[g]
            row["p1"], row["p2"] = f.p1, f.p2
            rows.append(row)
        return rows

    def to_csv(self):
        rows = self.to_rows()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["number", "feature"],
                           lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"counts": self.counts, "features": self.to_rows()}, indent=2)


@dataclass
class FeatureScreen:
    kept: List[int]
    dropped: Dict[int, str] = field(default_factory=dict)
    names: Sequence[str] = ()
    alpha: float = 0.05

    @property
    def kept_names(self):
        return [self.names[i] for i in self.kept]

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "kept": [self.names[i] for i in self.kept],
            "dropped": {self.names[i]: why for i, why in self.dropped.items()},
        }


def _describe(v):
    if len(v) == 0:
        return float("nan"), float("nan")
    sd = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return float(np.mean(v)), sd


def group_summary(X, labels, names=None) -> GroupSummary:
    """Per-feature mean and SD for each group plus two rank-sum p-values.

    ``p1`` compares Normal with SWEDD; ``p2`` compares PD with Normal and
    SWEDD pooled.  SDs use ``ddof=1`` (0 for a single subject).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    if len(labels) != len(X):
        raise ValueError("labels and rows differ in length")
    names = list(names) if names is not None else [f"f{j + 1}" for j in range(X.shape[1])]
    masks = {g: labels == g for g in LABELS}
    counts = {g: int(m.sum()) for g, m in masks.items()}
    for g, c in counts.items():
        if c == 0:
            raise EmptyGroup(f"no subjects labelled {g}")
    pooled = masks["Normal"] | masks["SWEDD"]

    out = []
    for j, name in enumerate(names):
        col = X[:, j]
        means, sds = {}, {}
        for g in LABELS:
            means[g], sds[g] = _describe(col[masks[g]])
        p1 = ranksum(col[masks["Normal"]], col[masks["SWEDD"]]).pvalue
        p2 = ranksum(col[masks["PD"]], col[pooled]).pvalue
        out.append(FeatureStats(name, means, sds, p1, p2))
    return GroupSummary(out, counts)


def screen_features(summary, alpha=0.05) -> FeatureScreen:
    """Keep features whose PD-vs-rest p-value is below ``alpha``."""
    kept, dropped = [], {}
    for i, f in enumerate(summary.features):
        if f.p2 < alpha:
            kept.append(i)
        else:
            dropped[i] = f"p2={f.p2:.3g} >= {alpha}"
    return FeatureScreen(kept, dropped, summary.names, alpha)
