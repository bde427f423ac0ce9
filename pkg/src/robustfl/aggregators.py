"""Server-side aggregation rules.

``fedavg`` is the sample-size weighted average. ``robustfl_round`` is the
prediction-based defense: forecast, score, split, and average only the
uploads judged benign. The remaining rules are classical baselines; they
aggregate unweighted and, where they need it, are told the number of
attackers ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import smoothing
from .detector import kmeans2_1d, score_updates, select_benign
from .errors import EmptyInput, InvalidParam
from .param_space import ParamVector, as_vector, mean, stack, weighted_sum


@dataclass(frozen=True, eq=False)
class ClientUpdate:
    client_id: int
    params: ParamVector
    n_k: int = 1

    def __post_init__(self):
        if self.n_k < 1:
            raise InvalidParam("n_k must be >= 1")
        object.__setattr__(self, "params", as_vector(self.params))


def _require(updates) -> list:
    updates = list(updates)
    if not updates:
        raise EmptyInput("no client updates")
    return updates


def fedavg(updates) -> ParamVector:
    updates = _require(updates)
    n = sum(u.n_k for u in updates)
    return weighted_sum([u.n_k / n for u in updates], [u.params for u in updates])


def robustfl_round(updates, state: smoothing.SmoothingState):
    """One defended aggregation step.

    Returns ``(w_next, new_state, report)``. The closer cluster is never
    empty, so ``w_next`` is always defined.
    """
    updates = _require(updates)
    forecast = smoothing.predict(state)
    scores = score_updates(updates, forecast)
    sc, lc = kmeans2_1d([s for _, s in scores])
    report = select_benign(scores, sc, lc)
    w_next = fedavg([u for u in updates if u.client_id in report.benign_ids])
    return w_next, smoothing.update(state, w_next), report


def coordinate_median(updates) -> ParamVector:
    return np.median(stack([u.params for u in _require(updates)]), axis=0)


def trimmed_mean(updates, beta: int) -> ParamVector:
    """Per coordinate, drop the ``beta`` largest and smallest values and
    average the rest."""
    updates = _require(updates)
    if beta < 0 or 2 * beta >= len(updates):
        raise InvalidParam(f"need 0 <= 2*beta < K, got beta={beta}, K={len(updates)}")
    mat = np.sort(stack([u.params for u in updates]), axis=0)
    return mat[beta:len(updates) - beta].mean(axis=0)


_TIE_RTOL = 1e-12


def _by_id(updates) -> list:
    return sorted(updates, key=lambda u: u.client_id)


def krum_scores(updates, f: int) -> list:
    """Sum of squared distances to the ``K - f - 2`` nearest other uploads."""
    K = len(updates)
    nb = K - f - 2
    if f < 0 or nb < 1:
        raise InvalidParam(f"Krum needs K >= f + 3, got K={K}, f={f}")
    mat = stack([u.params for u in updates])
    diff = mat[:, None, :] - mat[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    out = []
    for i in range(K):
        others = np.sort(np.delete(d2[i], i))
        out.append(float(others[:nb].sum()))
    return out


def multi_krum_select(updates, f: int, m: int | None = None) -> list:
    """Client ids of the ``m`` lowest Krum scores (default ``m = K - f``);
    ties prefer the smaller id."""
    updates = _by_id(_require(updates))
    K = len(updates)
    if m is None:
        m = K - f
    if not 1 <= m <= K:
        raise InvalidParam(f"need 1 <= m <= K, got m={m}")
    scores = krum_scores(updates, f)
    order = sorted(range(K), key=lambda i: (scores[i], updates[i].client_id))
    return [updates[i].client_id for i in order[:m]]


def multi_krum(updates, f: int, m: int | None = None) -> ParamVector:
    updates = _require(updates)
    chosen = set(multi_krum_select(updates, f, m))
    return mean([u.params for u in _by_id(updates) if u.client_id in chosen])


def faba_select(updates, f: int) -> list:
    """Ids surviving ``f`` rounds of dropping the upload farthest from the
    current mean (ties drop the smaller id)."""
    remaining = _by_id(_require(updates))
    if not 0 <= f < len(remaining):
        raise InvalidParam(f"need 0 <= f < K, got f={f}, K={len(remaining)}")
    for _ in range(f):
        centre = mean([u.params for u in remaining])
        dists = [float(np.linalg.norm(u.params - centre)) for u in remaining]
        # distances equal up to rounding count as a tie, settled by the smaller id
        cutoff = max(dists) * (1.0 - _TIE_RTOL)
        worst = min(i for i, d in enumerate(dists) if d >= cutoff)
        del remaining[worst]
    return [u.client_id for u in remaining]


def faba(updates, f: int) -> ParamVector:
    updates = _require(updates)
    keep = set(faba_select(updates, f))
    return mean([u.params for u in _by_id(updates) if u.client_id in keep])

