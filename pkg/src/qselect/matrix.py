"""Per-document score matrix: ingestion, normalization, correlation.

Raw scores live on wildly different scales (counts, entropies, log
ratios, 0-5 ratings), so columns are rank-normalized to [0, 1] before
weighting; a z-score mode exists for comparison. Model-based ratings may
arrive with gaps and are imputed to the column median (flagged); signals
and importance scores are computed locally and must be complete.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .corpus import Document
from .errors import MatrixError, ValidationError
from .registry import IMPORTANCE_NAMES, PRRC_NAMES, SIGNAL_NAMES

# Columns that must be complete before normalization; everything else is
# imputable (model-based ratings and ad hoc score channels).
_STRICT_NAMES = frozenset(SIGNAL_NAMES) | frozenset(IMPORTANCE_NAMES)

PRRC_RANGE = (0.0, 5.0)


@dataclass(frozen=True)
class RatingAnnotation:
    """One externally produced model-based rating for one document."""

    doc_id: str
    rater: str
    value: float


@dataclass
class IngestReport:
    """Outcome of streaming annotations into a matrix."""

    filled: dict[str, int] = field(default_factory=dict)
    unknown_doc_ids: list[str] = field(default_factory=list)

    def coverage(self, doc_count: int) -> dict[str, float]:
        if doc_count == 0:
            return {name: 0.0 for name in self.filled}
        return {name: count / doc_count for name, count in self.filled.items()}


class ScoreMatrix:
    """Documents x score-names matrix of raw and normalized values."""

    def __init__(
        self,
        score_names: Sequence[str],
        doc_ids: Sequence[str],
        raw: np.ndarray,
        normalized: np.ndarray | None = None,
        imputed: list[tuple[str, str]] | None = None,
    ) -> None:
        names = list(score_names)
        if len(set(names)) != len(names):
            raise MatrixError("duplicate score names")
        ids = list(doc_ids)
        if len(set(ids)) != len(ids):
            raise MatrixError("duplicate doc ids")
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (len(ids), len(names)):
            raise MatrixError(f"raw shape {raw.shape} does not match ids x names")
        self.score_names = names
        self.doc_ids = ids
        self.raw = raw
        self.normalized = normalized
        self.imputed = imputed or []
        self._id_index = {doc_id: i for i, doc_id in enumerate(ids)}
        self._name_index = {name: j for j, name in enumerate(names)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def row_index(self, doc_id: str) -> int:
        try:
            return self._id_index[doc_id]
        except KeyError:
            raise MatrixError(f"unknown doc id {doc_id!r}") from None

    def column_index(self, name: str) -> int:
        try:
            return self._name_index[name]
        except KeyError:
            raise MatrixError(f"unknown score name {name!r}") from None

    def column(self, name: str, normalized: bool = False) -> np.ndarray:
        source = self._require_normalized() if normalized else self.raw
        return source[:, self.column_index(name)]

    def _require_normalized(self) -> np.ndarray:
        if self.normalized is None:
            raise MatrixError("matrix has not been normalized yet")
        return self.normalized

    @classmethod
    def from_documents(
        cls, docs: Sequence[Document], score_names: Sequence[str]
    ) -> "ScoreMatrix":
        """Build a raw matrix from documents' attached scores maps.

        Missing cells stay NaN; call ingest_ratings / impute_missing before
        normalizing.
        """
        names = list(score_names)
        raw = np.full((len(docs), len(names)), np.nan)
        ids = []
        for i, doc in enumerate(docs):
            ids.append(doc.id)
            if doc.scores:
                for j, name in enumerate(names):
                    value = doc.scores.get(name)
                    if value is not None:
                        raw[i, j] = value
        return cls(names, ids, raw)


def ingest_ratings(
    matrix: ScoreMatrix, annotations: Iterable[RatingAnnotation]
) -> IngestReport:
    """Write external ratings into the raw matrix.

    Unknown doc ids are collected in the report rather than raised (shard
    mismatches are routine); an unregistered rater name or an out-of-range
    PRRC value is an error.
    """
    if matrix.normalized is not None:
        raise MatrixError("cannot ingest into a normalized matrix")
    report = IngestReport()
    for ann in annotations:
        if ann.rater not in matrix._name_index:
            raise MatrixError(f"unregistered rater {ann.rater!r}")
        if ann.rater in PRRC_NAMES and not (PRRC_RANGE[0] <= ann.value <= PRRC_RANGE[1]):
            raise ValidationError(
                f"{ann.rater} value {ann.value} outside {list(PRRC_RANGE)}"
            )
        row = matrix._id_index.get(ann.doc_id)
        if row is None:
            report.unknown_doc_ids.append(ann.doc_id)
            continue
        col = matrix._name_index[ann.rater]
        if math.isnan(matrix.raw[row, col]):
            report.filled[ann.rater] = report.filled.get(ann.rater, 0) + 1
        matrix.raw[row, col] = ann.value
    return report


def coverage_by_column(matrix: ScoreMatrix) -> dict[str, float]:
    """Fraction of non-missing cells per column."""
    n = matrix.n_docs
    if n == 0:
        return {name: 0.0 for name in matrix.score_names}
    present = np.sum(~np.isnan(matrix.raw), axis=0)
    return {name: present[j] / n for j, name in enumerate(matrix.score_names)}


def impute_missing(matrix: ScoreMatrix) -> list[tuple[str, str]]:
    """Fill remaining gaps with column medians, recording each imputation.

    Signal and importance columns are computed locally and must already be
    complete; a gap there is an upstream bug, not missing data.
    """
    flagged: list[tuple[str, str]] = []
    for j, name in enumerate(matrix.score_names):
        col = matrix.raw[:, j]
        missing = np.isnan(col)
        if not missing.any():
            continue
        if name in _STRICT_NAMES:
            raise MatrixError(
                f"column {name!r} has {int(missing.sum())} missing cells; "
                "signals and importance scores must be complete"
            )
        if missing.all():
            raise MatrixError(f"column {name!r} has no observed values to impute from")
        median = float(np.median(col[~missing]))
        for i in np.nonzero(missing)[0]:
            flagged.append((matrix.doc_ids[i], name))
        col[missing] = median
    matrix.imputed.extend(flagged)
    return flagged


def _rank_unit(col: np.ndarray) -> np.ndarray:
    n = col.size
    if n == 1:
        return np.array([0.5])
    ranks = rankdata(col, method="average")
    return (ranks - 1.0) / (n - 1.0)


def rank_normalize(matrix: ScoreMatrix, method: str = "rank") -> ScoreMatrix:
    """Return a matrix with per-column normalized values.

    ``rank`` maps each column to average-tie ranks scaled to [0, 1] (a
    single-document matrix maps to 0.5); ``zscore`` is the comparison mode
    and standardizes to mean 0, sd 1 (constant columns map to 0).
    """
    if matrix.n_docs == 0:
        raise MatrixError("cannot normalize an empty matrix")
    if np.isnan(matrix.raw).any():
        raise MatrixError("matrix has missing cells; impute before normalizing")
    if method == "rank":
        normalized = np.column_stack(
            [_rank_unit(matrix.raw[:, j]) for j in range(len(matrix.score_names))]
        )
    elif method == "zscore":
        mean = matrix.raw.mean(axis=0)
        std = matrix.raw.std(axis=0)
        std[std == 0.0] = 1.0
        normalized = (matrix.raw - mean) / std
    else:
        raise ValidationError(f"unknown normalization method {method!r}")
    return ScoreMatrix(
        matrix.score_names,
        matrix.doc_ids,
        matrix.raw,
        normalized=normalized,
        imputed=list(matrix.imputed),
    )


def spearman_matrix(matrix: ScoreMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise Spearman correlations (Pearson of average-tie ranks).

    Returns ``(rho, flagged)``: a symmetric matrix with unit diagonal, and
    a boolean mask marking cells involving a constant column, whose
    correlation is undefined and reported as NaN.
    """
    n, m = matrix.raw.shape
    if n < 2:
        raise MatrixError("spearman correlation needs at least 2 documents")
    ranks = np.column_stack([rankdata(matrix.raw[:, j], method="average") for j in range(m)])
    constant = ranks.std(axis=0) == 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.corrcoef(ranks, rowvar=False)
    rho = np.atleast_2d(rho)
    flagged = np.zeros((m, m), dtype=bool)
    flagged[constant, :] = True
    flagged[:, constant] = True
    rho[flagged] = np.nan
    np.fill_diagonal(rho, 1.0)
    np.fill_diagonal(flagged, False)
    return rho, flagged


def correlation_csv(score_names: Sequence[str], rho: np.ndarray) -> str:
    """Render a correlation matrix as CSV with name headers."""
    lines = ["name," + ",".join(score_names)]
    for i, name in enumerate(score_names):
        cells = ",".join("" if math.isnan(v) else repr(float(v)) for v in rho[i])
        lines.append(f"{name},{cells}")
    return "\n".join(lines) + "\n"


def save_matrix(matrix: ScoreMatrix, path: str | Path) -> None:
    """Persist raw values: a JSON header line of score names, then one
    line per document. Floats survive the round trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"score_names": matrix.score_names}) + "\n")
        for i, doc_id in enumerate(matrix.doc_ids):
            row = {"id": doc_id, "values": [float(v) for v in matrix.raw[i]]}
            fh.write(json.dumps(row) + "\n")


def load_matrix(path: str | Path) -> ScoreMatrix:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        names = header["score_names"]
        ids: list[str] = []
        rows: list[list[float]] = []
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            ids.append(obj["id"])
            rows.append(obj["values"])
    raw = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, len(names)))
    return ScoreMatrix(names, ids, raw)
