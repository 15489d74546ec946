"""Validation metrics: rank correlations, top-k retrieval, and scale errors.

Correlations use average ranks for ties (Spearman) and the tie-corrected
tau-b (Kendall). Top-k sets break score ties by ascending entity id so results
are reproducible. Error metrics compare against ratings after min-max rescaling
the scores onto the rating range, since propagation scores have no scale of
their own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    IdUniverseMismatchError,
    KTooLargeError,
    LengthMismatchError,
    TooFewSamplesError,
)


def _paired_arrays(a, b, what: str) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.shape != xb.shape or xa.ndim != 1:
        raise LengthMismatchError(f"{what}: got shapes {xa.shape} and {xb.shape}")
    return xa, xb


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they occupy."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=float)
    i = 0
    while i < len(x):
        j = i
        while j < len(x) and x[order[j]] == x[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0
        i = j
    return ranks


def spearman(a, b) -> float:
    """Spearman rank correlation with average-rank tie handling.

    Returns nan when either side has zero rank variance (correlation is
    undefined for a constant vector).
    """
    xa, xb = _paired_arrays(a, b, "spearman")
    if len(xa) < 2:
        raise TooFewSamplesError(f"spearman needs at least 2 samples, got {len(xa)}")
    ra = average_ranks(xa)
    rb = average_ranks(xb)
    da = ra - ra.mean()
    db = rb - rb.mean()
    denom_sq = float((da * da).sum()) * float((db * db).sum())
    if denom_sq == 0.0:
        return math.nan
    return float((da * db).sum()) / math.sqrt(denom_sq)


def kendall(a, b) -> float:
    """Kendall rank correlation, tie-corrected (tau-b).

    Returns nan when every pair is tied on one side.
    """
    xa, xb = _paired_arrays(a, b, "kendall")
    n = len(xa)
    if n < 2:
        raise TooFewSamplesError(f"kendall needs at least 2 samples, got {n}")
    sa = np.sign(xa[:, None] - xa[None, :])
    sb = np.sign(xb[:, None] - xb[None, :])
    iu = np.triu_indices(n, k=1)
    concordance = float((sa[iu] * sb[iu]).sum())
    n0 = n * (n - 1) / 2.0
    ties_a = float((sa[iu] == 0).sum())
    ties_b = float((sb[iu] == 0).sum())
    denom_sq = (n0 - ties_a) * (n0 - ties_b)
    if denom_sq == 0.0:
        return math.nan
    return concordance / math.sqrt(denom_sq)


def _scored_dict(scored, what: str) -> dict[str, float]:
    if isinstance(scored, Mapping):
        return {str(k): float(v) for k, v in scored.items()}
    out = {}
    for ident, value in scored:
        if ident in out:
            raise IdUniverseMismatchError(f"{what}: duplicate id {ident!r}")
        out[str(ident)] = float(value)
    return out


def top_k_ids(scored, k: int) -> list[str]:
    """Ids of the k highest scores, ties broken by ascending id."""
    scores = _scored_dict(scored, "top_k")
    if k < 1:
        raise KTooLargeError(f"k must be at least 1, got {k}")
    if k > len(scores):
        raise KTooLargeError(f"k={k} exceeds the {len(scores)} scored items")
    return sorted(scores, key=lambda i: (-scores[i], i))[:k]


def precision_at_k(predicted, truth, k: int) -> tuple[float, float, float]:
    """Overlap of the predicted and true top-k sets: (precision, recall, f1).

    Both lists must score the same ids. Because both sides contribute exactly
    k items, precision and recall coincide here; f1 is their harmonic mean.
    """
    pred = _scored_dict(predicted, "predicted")
    true = _scored_dict(truth, "truth")
    if set(pred) != set(true):
        only_pred = sorted(set(pred) - set(true))[:3]
        only_true = sorted(set(true) - set(pred))[:3]
        raise IdUniverseMismatchError(
            f"predicted and truth must score the same ids "
            f"(only-predicted: {only_pred}, only-truth: {only_true})"
        )
    overlap = len(set(top_k_ids(pred, k)) & set(top_k_ids(true, k)))
    precision = overlap / k
    recall = overlap / k
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def rmse_mae(predicted, truth) -> tuple[float, float]:
    """Root-mean-square and mean absolute error of two aligned vectors."""
    xa, xb = _paired_arrays(predicted, truth, "rmse_mae")
    if len(xa) == 0:
        raise TooFewSamplesError("rmse_mae needs at least 1 sample")
    diff = xa - xb
    return float(np.sqrt((diff * diff).mean())), float(np.abs(diff).mean())


def normalize_scores_for_error(scores, ratings) -> np.ndarray:
    """Min-max rescale scores onto the ratings' value range.

    A constant score vector carries no ordering information, so it maps to the
    midpoint of the rating range.
    """
    s = np.asarray(scores, dtype=float)
    r = np.asarray(ratings, dtype=float)
    if len(s) == 0:
        return s.copy()
    lo, hi = float(r.min()), float(r.max())
    smin, smax = float(s.min()), float(s.max())
    if smax == smin:
        return np.full(len(s), (lo + hi) / 2.0)
    return lo + (s - smin) * (hi - lo) / (smax - smin)


@dataclass(frozen=True)
class MetricsReport:
    """One evaluation row: a score column against ground truth on one layer."""

    layer: str
    baseline: str
    scenario: str
    k: int | None
    sample_size: int
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    spearman: float | None = None
    kendall: float | None = None
    rmse: float | None = None
    mae: float | None = None

    def as_dict(self) -> dict:
        return {
            "layer": self.layer,
            "baseline": self.baseline,
            "scenario": self.scenario,
            "k": self.k,
            "sample_size": self.sample_size,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "spearman": self.spearman,
            "kendall": self.kendall,
            "rmse": self.rmse,
            "mae": self.mae,
        }


def _clean_corr(value: float) -> float | None:
    return None if math.isnan(value) else value


def build_report(layer: str, baseline: str, scenario: str,
                 scores: Mapping[str, float], truth: Mapping[str, float],
                 k: int | None = None) -> MetricsReport:
    """Compare a score column to ground truth over their shared id universe.

    Entities missing from either side are dropped (an unrated entity cannot
    anchor a comparison). Correlations on fewer than two shared entities, or on
    constant vectors, are reported as absent rather than zero.
    """
    scores = _scored_dict(scores, "scores")
    truth = _scored_dict(truth, "truth")
    ids = sorted(set(scores) & set(truth))
    s = np.array([scores[i] for i in ids], dtype=float)
    t = np.array([truth[i] for i in ids], dtype=float)

    rho = tau = None
    if len(ids) >= 2:
        rho = _clean_corr(spearman(s, t))
        tau = _clean_corr(kendall(s, t))
    precision = recall = f1 = None
    if k is not None and 1 <= k <= len(ids):
        sub_s = {i: scores[i] for i in ids}
        sub_t = {i: truth[i] for i in ids}
        precision, recall, f1 = precision_at_k(sub_s, sub_t, k)
    err_rmse = err_mae = None
    if ids:
        normalized = normalize_scores_for_error(s, t)
        err_rmse, err_mae = rmse_mae(normalized, t)
    return MetricsReport(layer=layer, baseline=baseline, scenario=scenario, k=k,
                         sample_size=len(ids), precision=precision, recall=recall, f1=f1,
                         spearman=rho, kendall=tau, rmse=err_rmse, mae=err_mae)
