"""Byzantine client identification: distance of each upload to the
forecast, exact two-cluster split of those distances, and the benign /
malicious verdict."""

from __future__ import annotations

from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyInput, UnknownClientId
from .param_space import ParamVector, l2_distance


@dataclass(frozen=True)
class ScoreReport:
    scores: list            # [(client_id, score), ...] in upload order
    sc: float               # centroid of the cluster nearer the forecast
    lc: float               # centroid of the farther cluster
    benign_ids: frozenset = field(default_factory=frozenset)
    malicious_ids: frozenset = field(default_factory=frozenset)

    @property
    def client_ids(self) -> list:
        return [cid for cid, _ in self.scores]


def score_updates(updates, forecast: ParamVector) -> list:
    """``(client_id, ||params - forecast||)`` for each update, input order kept."""
    forecast = np.asarray(forecast, dtype=np.float64)
    out = []
    for u in updates:
        if np.shape(u.params) != forecast.shape:
            raise DimensionMismatch(
                f"client {u.client_id}: dim {np.size(u.params)} vs forecast {forecast.size}")
        out.append((u.client_id, l2_distance(u.params, forecast)))
    return out


def kmeans2_1d(scores, seed: int = 0) -> tuple[float, float]:
    """Globally optimal 2-means of scalar data, returned as ``(sc, lc)``.

    In one dimension an optimal 2-clustering is always a threshold split of
    the sorted values, so every split is scored and the lowest
    within-cluster sum of squares wins (ties go to the lowest threshold).
    Costs are computed in exact rational arithmetic from prefix sums, and
    the centroids are the correctly rounded cluster means. Constant input
    yields ``sc == lc``. ``seed`` is accepted for interface compatibility;
    the solver is deterministic.
    """
    del seed
    xs = sorted(float(s) for s in scores)
    if not xs:
        raise EmptyInput("kmeans2_1d needs at least one score")
    if xs[0] == xs[-1]:
        return xs[0], xs[0]
    n = len(xs)
    exact = [Fraction(x) for x in xs]
    total = sum(exact)
    total_sq = sum(x * x for x in exact)
    best_cost, best_cut = None, None
    left, left_sq = Fraction(0), Fraction(0)
    for cut in range(1, n):
        left += exact[cut - 1]
        left_sq += exact[cut - 1] ** 2
        right, right_sq = total - left, total_sq - left_sq
        # SSE of a group = sum(x^2) - (sum x)^2 / size
        cost = left_sq - left * left / cut + right_sq - right * right / (n - cut)
        if best_cost is None or cost < best_cost:
            best_cost, best_cut = cost, cut
    left = sum(exact[:best_cut])
    return float(left / best_cut), float((total - left) / (n - best_cut))


def select_benign(scores, sc: float, lc: float) -> ScoreReport:
    """Benign iff strictly closer to ``sc`` than to ``lc``; all benign if the
    two centroids coincide."""
    benign, malicious = [], []
    for cid, s in scores:
        if sc == lc or abs(s - sc) < abs(s - lc):
            benign.append(cid)
        else:
            malicious.append(cid)
    return ScoreReport(list(scores), float(sc), float(lc),
                       frozenset(benign), frozenset(malicious))


def detection_metrics(flagged, ground_truth, client_ids=None) -> tuple[float, float, float]:
    """Precision, recall and F1 of ``flagged`` against ``ground_truth``.

    ``flagged`` may be a ScoreReport (its malicious set and client ids are
    used) or a plain id collection. Precision is 1 when nothing is flagged;
    recall is 1 when the ground truth is empty.
    """
    if isinstance(flagged, ScoreReport):
        if client_ids is None:
            client_ids = flagged.client_ids
        flagged = flagged.malicious_ids
    flagged, truth = set(flagged), set(ground_truth)
    if client_ids is not None:
        unknown = truth - set(client_ids)
        if unknown:
            raise UnknownClientId(f"ground truth ids not among clients: {sorted(unknown)}")
    hit = len(flagged & truth)
    precision = hit / len(flagged) if flagged else 1.0
    recall = hit / len(truth) if truth else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
