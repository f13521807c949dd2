"""Weighted score aggregation and budgeted, domain-proportional selection.

Selection fills each domain's token quota (budget x proportion)
independently, taking documents in descending aggregate score. The
document that crosses a quota is included, so per-domain overshoot is at
most one document. Ties break by the plan's policy (lexicographic id by
default) so results are reproducible across runs and thread counts.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Document
from .errors import ValidationError
from .matrix import ScoreMatrix
from .registry import DEFAULT_DOMAIN_WEIGHTS, REFERENCE_WEIGHT_PCT

SIMPLEX_TOL = 1e-9

TIE_BREAK_POLICIES = ("lexicographic",)


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights over score names, summing to 1."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if len(self.names) != values.size:
            raise ValidationError("weight names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("duplicate names in weight vector")
        if values.size == 0:
            raise ValidationError("empty weight vector")
        if (values < 0).any():
            bad = self.names[int(np.argmin(values))]
            raise ValidationError(f"negative weight for {bad!r}")
        total = float(values.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"weights sum to {total!r}, expected 1 within {SIMPLEX_TOL}")

    @classmethod
    def from_mapping(
        cls, mapping: Mapping[str, float], normalize: bool = False
    ) -> "WeightVector":
        names = tuple(mapping)
        values = np.array([float(mapping[n]) for n in names])
        if normalize:
            if (values < 0).any():
                raise ValidationError("cannot normalize weights with negative entries")
            total = values.sum()
            if total <= 0:
                raise ValidationError("cannot normalize an all-zero weight vector")
            values = values / total
        return cls(names, values)

    @classmethod
    def uniform(cls, names: Sequence[str]) -> "WeightVector":
        n = len(names)
        return cls(tuple(names), np.full(n, 1.0 / n))

    def as_mapping(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.names, self.values)}

    def aligned_to(self, names: Sequence[str]) -> np.ndarray:
        """Values reordered to ``names``; name sets must match exactly."""
        if set(names) != set(self.names):
            missing = set(names) - set(self.names)
            extra = set(self.names) - set(names)
            raise ValidationError(
                f"weight names do not match matrix: missing={sorted(missing)}, "
                f"extra={sorted(extra)}"
            )
        index = {n: i for i, n in enumerate(self.names)}
        return self.values[[index[n] for n in names]]


def reference_weights() -> WeightVector:
    """The published learned weights fixture, projected onto the simplex."""
    return WeightVector.from_mapping(REFERENCE_WEIGHT_PCT, normalize=True)


@dataclass(frozen=True)
class SelectionPlan:
    """Token budget, per-domain target proportions, and tie-break policy."""

    token_budget: int
    domain_targets: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_DOMAIN_WEIGHTS)
    )
    tie_break: str = "lexicographic"

    def __post_init__(self) -> None:
        if self.token_budget <= 0:
            raise ValidationError("token_budget must be positive")
        if self.tie_break not in TIE_BREAK_POLICIES:
            raise ValidationError(f"unknown tie_break policy {self.tie_break!r}")
        if not self.domain_targets:
            raise ValidationError("empty domain_targets")
        for name, p in self.domain_targets.items():
            if p < 0:
                raise ValidationError(f"negative proportion for domain {name!r}")
        total = math.fsum(self.domain_targets.values())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"domain proportions sum to {total!r}, expected 1")

    @classmethod
    def cc_only(cls, token_budget: int, tie_break: str = "lexicographic") -> "SelectionPlan":
        return cls(token_budget, {"CommonCrawl": 1.0}, tie_break)


@dataclass
class DomainShortfall:
    domain: str
    target_tokens: float
    achieved_tokens: int


@dataclass
class SelectionResult:
    """Outcome of a budgeted selection."""

    selected_ids: list[str]
    domain_tokens: dict[str, int]
    achieved_proportions: dict[str, float]
    thresholds: dict[str, float | None]
    shortfalls: list[DomainShortfall]

    @property
    def total_tokens(self) -> int:
        return sum(self.domain_tokens.values())

    def write_manifest(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id in self.selected_ids:
                fh.write(doc_id + "\n")

    def report_dict(self, seed: int | None = None) -> dict:
        report: dict = {}
        if seed is not None:
            report["seed"] = seed
        report.update(
            {
                "total_tokens": self.total_tokens,
                "domain_tokens": self.domain_tokens,
                "achieved_proportions": self.achieved_proportions,
                "thresholds": self.thresholds,
                "shortfalls": [
                    {
                        "domain": s.domain,
                        "target_tokens": s.target_tokens,
                        "achieved_tokens": s.achieved_tokens,
                    }
                    for s in self.shortfalls
                ],
            }
        )
        return report

    def write_report(self, path: str | Path, seed: int | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.report_dict(seed), fh, indent=2)
            fh.write("\n")


def aggregate_score(doc_scores: Mapping[str, float], w: WeightVector) -> float:
    """Weighted sum of one document's normalized scores."""
    if set(doc_scores) != set(w.names):
        raise ValidationError("score names do not match weight names")
    return float(math.fsum(w.as_mapping()[n] * doc_scores[n] for n in w.names))


def aggregate_scores(matrix: ScoreMatrix, w: WeightVector) -> np.ndarray:
    """Aggregate scores for every document, in matrix row order."""
    normalized = matrix.normalized
    if normalized is None:
        raise ValidationError("matrix must be normalized before aggregation")
    return normalized @ w.aligned_to(matrix.score_names)


def _fill_quota(
    ordered: list[tuple[str, float, int]], target: float
) -> tuple[list[str], int, float | None]:
    """Take docs in order until ``target`` tokens are reached.

    The crossing document is included. Returns (ids, tokens, last score).
    """
    ids: list[str] = []
    tokens = 0
    threshold: float | None = None
    for doc_id, score, doc_tokens in ordered:
        if tokens >= target:
            break
        ids.append(doc_id)
        tokens += doc_tokens
        threshold = score
    return ids, tokens, threshold


def _budgeted_selection(
    pools: dict[str, list[tuple[str, float, int]]], plan: SelectionPlan
) -> SelectionResult:
    selected: list[str] = []
    domain_tokens: dict[str, int] = {}
    thresholds: dict[str, float | None] = {}
    shortfalls: list[DomainShortfall] = []
    for domain, proportion in plan.domain_targets.items():
        target = plan.token_budget * proportion
        pool = pools.get(domain, [])
        pool.sort(key=lambda item: (-item[1], item[0]))
        ids, tokens, threshold = _fill_quota(pool, target)
        selected.extend(ids)
        domain_tokens[domain] = tokens
        thresholds[domain] = threshold
        if tokens < target:
            shortfalls.append(DomainShortfall(domain, target, tokens))
    total = sum(domain_tokens.values())
    achieved = {
        domain: (tokens / total if total else 0.0)
        for domain, tokens in domain_tokens.items()
    }
    return SelectionResult(selected, domain_tokens, achieved, thresholds, shortfalls)


def _domain_pools(
    matrix: ScoreMatrix,
    docs: Iterable[Document],
    plan: SelectionPlan,
    scores: np.ndarray,
) -> dict[str, list[tuple[str, float, int]]]:
    pools: dict[str, list[tuple[str, float, int]]] = {d: [] for d in plan.domain_targets}
    for doc in docs:
        row = matrix.row_index(doc.id)
        pool = pools.get(doc.domain)
        if pool is None:
            # Domains outside the plan contribute nothing to any quota.
            continue
        pool.append((doc.id, float(scores[row]), doc.token_estimate))
    return pools


def select_top_k(
    matrix: ScoreMatrix,
    docs: Iterable[Document],
    w: WeightVector,
    plan: SelectionPlan,
) -> SelectionResult:
    """Select the top-scoring documents per domain under the plan's quotas.

    Equivalent to sorting each domain by aggregate score (ties by id) and
    taking the shortest prefix whose token sum reaches the domain target.
    Domains whose pools run out early are reported as shortfalls.
    """
    scores = aggregate_scores(matrix, w)
    pools = _domain_pools(matrix, docs, plan, scores)
    return _budgeted_selection(pools, plan)


def intersection_select(
    matrix: ScoreMatrix,
    docs: Iterable[Document],
    thresholds: Mapping[str, float],
    plan: SelectionPlan,
) -> SelectionResult:
    """Admit only documents meeting every threshold, then fill quotas.

    Thresholds apply to rank-normalized values in [0, 1]. Admitted
    documents are ranked by their mean normalized value over the
    thresholded scores, so all-zero thresholds reduce to uniform-weight
    top-k over the full pool. Strict thresholds can empty a domain, which
    surfaces as a shortfall rather than an error.
    """
    if not thresholds:
        raise ValidationError("intersection_select needs at least one threshold")
    normalized = matrix.normalized
    if normalized is None:
        raise ValidationError("matrix must be normalized before selection")
    cols = [matrix.column_index(name) for name in thresholds]
    mins = np.array([thresholds[name] for name in thresholds])
    values = normalized[:, cols]
    admitted = (values >= mins).all(axis=1)
    order_scores = values.mean(axis=1)

    pools: dict[str, list[tuple[str, float, int]]] = {d: [] for d in plan.domain_targets}
    for doc in docs:
        row = matrix.row_index(doc.id)
        if not admitted[row]:
            continue
        pool = pools.get(doc.domain)
        if pool is None:
            continue
        pool.append((doc.id, float(order_scores[row]), doc.token_estimate))
    return _budgeted_selection(pools, plan)


def read_manifest(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]
