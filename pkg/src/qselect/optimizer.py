"""Regression over campaign records and optimal-weight search.

Fits the boosted-trees regressor mapping weight vectors to validation
loss, scores a dense set of simplex candidates, and averages the top-k
candidates into the final weight vector. Also exports a 2-D PCA view of
the predicted loss surface over the weight space.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gbt import GradientBoostedRegressor, RegressorHyper, fit_gradient_boosted
from .proxy import ExperimentRecord, sample_simplex
from .selection import WeightVector

logger = logging.getLogger(__name__)

MIN_RECORDS = 16

DEFAULT_CANDIDATES = 100_000
DEFAULT_TOP_K = 100


@dataclass
class RegressorModel:
    """Fitted loss predictor over weight-vector features."""

    score_names: tuple[str, ...]
    booster: GradientBoostedRegressor
    hyper: RegressorHyper
    in_sample_rmse: float

    def predict_rows(self, W: np.ndarray) -> np.ndarray:
        return self.booster.predict(W)

    def predict(self, w: WeightVector) -> float:
        row = w.aligned_to(self.score_names)
        return float(self.booster.predict(row[None, :])[0])


def _records_to_arrays(
    records: Sequence[ExperimentRecord], min_records: int = MIN_RECORDS
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    ok = [r for r in records if r.status == "ok" and r.loss is not None]
    if len(ok) < min_records:
        raise ValidationError(
            f"need at least {min_records} successful records, got {len(ok)}"
        )
    names = tuple(ok[0].weights)
    X = np.empty((len(ok), len(names)))
    y = np.empty(len(ok))
    for i, record in enumerate(ok):
        if set(record.weights) != set(names):
            raise ValidationError(
                f"record {record.experiment_id} has inconsistent score names"
            )
        X[i] = [record.weights[n] for n in names]
        y[i] = record.loss
    return names, X, y


def fit_regressor(
    records: Sequence[ExperimentRecord], hyper: RegressorHyper | None = None
) -> RegressorModel:
    """Fit the loss regression on successful campaign records.

    Rows are put into a canonical lexicographic order first, so the fitted
    model is identical however the records were collected or permuted.
    """
    hyper = hyper or RegressorHyper()
    names, X, y = _records_to_arrays(records)
    order = np.lexsort(np.vstack([y[None, :], X.T])[::-1])
    X, y = X[order], y[order]
    if np.ptp(y) == 0.0:
        logger.warning("all %d losses are identical; fitting a constant model", y.size)
    booster = fit_gradient_boosted(X, y, hyper)
    rmse = float(np.sqrt(np.mean((booster.predict(X) - y) ** 2)))
    return RegressorModel(names, booster, hyper, rmse)


@dataclass
class SearchOutcome:
    """Result of the candidate sweep."""

    w_star: WeightVector
    top_candidates: list[tuple[WeightVector, float]]
    predicted_loss_at_star: float

    def __post_init__(self) -> None:
        losses = [loss for _, loss in self.top_candidates]
        if any(b < a for a, b in zip(losses, losses[1:])):
            raise ValidationError("top candidates must be sorted by predicted loss")


def search_optimal(
    model: RegressorModel,
    n_candidates: int = DEFAULT_CANDIDATES,
    top_k: int = DEFAULT_TOP_K,
    seed: int = 0,
    concentration: float = 1.0,
    chunk_size: int = 200_000,
) -> SearchOutcome:
    """Sweep Dirichlet candidates through the model, average the best k.

    The returned vector is the renormalized mean of the k candidates with
    the lowest predicted loss (ties resolved by draw order), which is more
    robust than trusting the single best cell of a piecewise-constant
    model.
    """
    if top_k < 1 or n_candidates < top_k:
        raise ValidationError("need n_candidates >= top_k >= 1")
    m = len(model.score_names)
    candidates = sample_simplex(m, n_candidates, seed, concentration)
    preds = np.empty(n_candidates)
    for start in range(0, n_candidates, chunk_size):
        block = candidates[start : start + chunk_size]
        preds[start : start + chunk_size] = model.predict_rows(block)
    best = np.argsort(preds, kind="stable")[:top_k]
    mean = candidates[best].mean(axis=0)
    w_star = WeightVector(model.score_names, mean / mean.sum())
    top = [
        (WeightVector(model.score_names, candidates[i]), float(preds[i])) for i in best
    ]
    return SearchOutcome(w_star, top, model.predict(w_star))


def rank_weights(w: WeightVector) -> list[dict]:
    """Sorted weight report with competition ranking (ties share a rank)."""
    items = sorted(w.as_mapping().items(), key=lambda kv: (-kv[1], kv[0]))
    report = []
    rank = 0
    previous: float | None = None
    for position, (name, weight) in enumerate(items, start=1):
        if previous is None or weight != previous:
            rank = position
            previous = weight
        report.append({"name": name, "weight": weight, "pct": 100.0 * weight, "rank": rank})
    return report


def write_weights(path: str | Path, w: WeightVector, seed: int | None = None) -> None:
    """Write the weight report file: {seed, weights: [{name, weight, rank}]}."""
    payload: dict = {}
    if seed is not None:
        payload["seed"] = seed
    payload["weights"] = [
        {"name": row["name"], "weight": row["weight"], "rank": row["rank"]}
        for row in rank_weights(w)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_weights(path: str | Path, normalize: bool = False) -> WeightVector:
    """Load a weights file; accepts the report object or a bare list."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    rows = payload["weights"] if isinstance(payload, dict) else payload
    mapping = {row["name"]: float(row["weight"]) for row in rows}
    return WeightVector.from_mapping(mapping, normalize=normalize)


@dataclass
class Landscape:
    """2-D principal-component view of the predicted loss surface."""

    components: np.ndarray  # (2, m) orthonormal rows
    explained_variance: np.ndarray  # all components, non-increasing
    projections: np.ndarray  # (n_records, 2)
    grid_points: list[tuple[float, float, float]]  # (pc1, pc2, predicted loss)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("pc1,pc2,predicted_loss\n")
            for pc1, pc2, loss in self.grid_points:
                fh.write(f"{pc1!r},{pc2!r},{loss!r}\n")


def pca_landscape(
    records: Sequence[ExperimentRecord],
    model: RegressorModel,
    grid: int = 41,
) -> Landscape:
    """Project campaign weights onto their top-2 principal directions and
    evaluate the regressor on a grid x grid lattice over the projected
    range. Weight sets with fewer than two independent directions fall
    back to a 1-D sweep along the first component."""
    if grid < 2:
        raise ValidationError("grid must be at least 2")
    names, X, _ = _records_to_arrays(records, min_records=3)
    if set(names) != set(model.score_names):
        raise ValidationError("records and model disagree on score names")
    mean = X.mean(axis=0)
    centered = X - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    explained = singular**2 / (X.shape[0] - 1)
    rank = int((singular > 1e-12 * max(singular[0], 1.0)).sum())
    two_d = rank >= 2
    if not two_d:
        logger.warning("weight set spans <2 directions; falling back to a 1-D sweep")
    components = vt[:2] if two_d else np.vstack([vt[0], np.zeros_like(vt[0])])
    projections = centered @ components.T

    pc1 = np.linspace(projections[:, 0].min(), projections[:, 0].max(), grid)
    if two_d:
        pc2 = np.linspace(projections[:, 1].min(), projections[:, 1].max(), grid)
    else:
        pc2 = np.array([0.0])
    aligned = [model.score_names.index(n) for n in names]
    points: list[tuple[float, float, float]] = []
    for a in pc1:
        ws = mean[None, :] + a * components[0][None, :] + pc2[:, None] * components[1][None, :]
        W = np.empty_like(ws)
        W[:, aligned] = ws
        losses = model.predict_rows(W)
        points.extend((float(a), float(b), float(l)) for b, l in zip(pc2, losses))
    return Landscape(components, explained, projections, points)
