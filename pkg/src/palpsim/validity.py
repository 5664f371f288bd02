"""Validity score aggregation and reliability statistics for rater studies.

Scores run 1..10 per metric (face, content, construct, concurrent,
predictive). Inter-rater agreement is summarized by the mean pairwise
absolute difference plus the exact-agreement fraction; test-retest
stability by mean absolute difference plus Pearson correlation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

VALIDITY_METRICS = ("face", "content", "construct", "concurrent", "predictive")


class RaterRole(Enum):
    EXPERT = "expert"
    RESIDENT = "resident"


@dataclass(frozen=True)
class ValidityScoreSheet:
    rater: str
    role: RaterRole
    scores: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for metric, value in self.scores.items():
            if metric not in VALIDITY_METRICS:
                raise ConfigurationError(f"unknown validity metric '{metric}'")
            if not (isinstance(value, int) and 1 <= value <= 10):
                raise ConfigurationError(
                    f"score for '{metric}' must be an integer in [1, 10], got {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ValidityScoreSheet":
        try:
            return cls(
                rater=str(data["rater"]),
                role=RaterRole(data["role"]),
                scores={k: int(v) for k, v in data["scores"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed score sheet: {exc}") from exc


def _round_half_up_1(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def aggregate_validity(sheets: list[ValidityScoreSheet]) -> dict:
    """Mean score per metric (1 decimal, half-up) with a per-role breakdown."""
    if not sheets:
        raise ConfigurationError("need at least one score sheet")
    result: dict = {"means": {}, "by_role": {}, "rater_count": len(sheets)}
    for metric in VALIDITY_METRICS:
        values = [s.scores[metric] for s in sheets if metric in s.scores]
        if not values:
            continue
        result["means"][metric] = _round_half_up_1(sum(values) / len(values))
        for role in RaterRole:
            role_values = [s.scores[metric] for s in sheets
                           if s.role is role and metric in s.scores]
            if role_values:
                result["by_role"].setdefault(role.value, {})[metric] = _round_half_up_1(
                    sum(role_values) / len(role_values))
    if not result["means"]:
        raise ConfigurationError("score sheets carry no known metrics")
    return result


def inter_rater(matrix) -> dict:
    """Agreement between raters over shared items.

    ``matrix`` is raters x items. Returns the mean over items of the mean
    absolute difference over rater pairs, and the fraction of items on
    which every rater agrees exactly.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ConfigurationError("inter-rater input must be a raters x items matrix")
    raters, items = m.shape
    if raters < 2:
        raise ConfigurationError("need at least 2 raters")
    if items < 1:
        raise ConfigurationError("need at least 1 item")
    pair_diffs = []
    for a, b in combinations(range(raters), 2):
        pair_diffs.append(np.abs(m[a] - m[b]))
    per_item_mean = np.mean(pair_diffs, axis=0)
    agreement = np.all(m == m[0], axis=0)
    return {
        "mean_pairwise_abs_diff": float(per_item_mean.mean()),
        "exact_agreement_fraction": float(agreement.mean()),
    }


def test_retest(pairs) -> dict:
    """Stability across two administrations of the same assessment.

    Pearson r is undefined when either margin has zero variance; the result
    then carries ``pearson_defined: False`` and a null coefficient.
    """
    pts = [(float(a), float(b)) for a, b in pairs]
    if len(pts) < 2:
        raise ConfigurationError("need at least 2 score pairs")
    first = np.array([a for a, _ in pts])
    second = np.array([b for _, b in pts])
    mad = float(np.abs(first - second).mean())
    dx = first - first.mean()
    dy = second - second.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        return {"mean_abs_diff": mad, "pearson_r": None, "pearson_defined": False}
    r = float((dx * dy).sum() / (sx * sy))
    return {"mean_abs_diff": mad, "pearson_r": r, "pearson_defined": True}


def load_sheets_dir(path) -> list[ValidityScoreSheet]:
    """Read every ``*.json`` score sheet in a directory, sorted by name."""
    path = Path(path)
    sheets = []
    for p in sorted(path.glob("*.json")):
        data = json.loads(p.read_text(encoding="utf-8"))
        sheets.append(ValidityScoreSheet.from_dict(data))
    if not sheets:
        raise ConfigurationError(f"no score sheets found in {path}")
    return sheets


def summarize_reports(reports: list[dict]) -> dict:
    """Cross-session roll-up of assessment reports.

    Per scenario kind: mean score and fail fraction. Students with repeat
    sessions contribute (first, second) total-score pairs to a test-retest
    estimate.
    """
    per_kind: dict[str, list] = {}
    totals_by_student: dict[str, list[tuple[str, float]]] = {}
    for doc in reports:
        total = 0.0
        for record in doc.get("scenarios", []):
            kind = record["kind"]
            per_kind.setdefault(kind, []).append(record)
            total += float(record["score"])
        student = doc.get("student")
        if student:
            totals_by_student.setdefault(student, []).append(
                (doc.get("session_id", ""), total))

    kinds_summary = {}
    for kind, records in sorted(per_kind.items()):
        scores = [float(r["score"]) for r in records]
        fails = [bool(r["failed"]) for r in records]
        kinds_summary[kind] = {
            "sessions": len(records),
            "mean_score": float(np.mean(scores)),
            "fail_fraction": float(np.mean(fails)),
        }

    retest_pairs = []
    for student, entries in sorted(totals_by_student.items()):
        entries.sort(key=lambda item: item[0])
        for (_, a), (_, b) in zip(entries, entries[1:]):
            retest_pairs.append((a, b))
    summary: dict = {
        "report_count": len(reports),
        "scenario_kinds": kinds_summary,
    }
    if len(retest_pairs) >= 2:
        summary["test_retest"] = test_retest(retest_pairs)
    return summary


def assess_corpus(sheets_dir=None, reports_dir=None) -> dict:
    """Combined validity/reliability summary for the CLI."""
    out: dict = {}
    if sheets_dir:
        sheets = load_sheets_dir(sheets_dir)
        out["validity"] = aggregate_validity(sheets)
        # rater agreement over the metrics every sheet scored
        shared = [m for m in VALIDITY_METRICS if all(m in s.scores for s in sheets)]
        if shared and len(sheets) >= 2:
            rater_matrix = [[s.scores[m] for m in shared] for s in sheets]
            out["inter_rater"] = inter_rater(rater_matrix)
    if reports_dir:
        reports = []
        for p in sorted(Path(reports_dir).glob("*.json")):
            reports.append(json.loads(p.read_text(encoding="utf-8")))
        out["reports"] = summarize_reports(reports)
    if not out:
        raise ConfigurationError("assess needs a sheets directory or a reports directory")
    return out
