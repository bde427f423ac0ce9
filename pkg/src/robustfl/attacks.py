"""Compromised-client behaviours: label flipping (data poisoning), sign
flipping and the colluding "a little is enough" (LIE) upload (model
poisoning)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset
from .errors import InvalidParam
from .param_space import ParamVector, stack

ATTACK_KINDS = ("none", "label_flip", "sign_flip", "lie")


@dataclass(frozen=True)
class AttackSpec:
    kind: str = "none"
    c: float = 0.8
    z: float = 0.3
    malicious_ids: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise InvalidParam(f"unknown attack kind {self.kind!r}")
        if not self.c > 0:
            raise InvalidParam("sign-flip magnitude c must be > 0")
        object.__setattr__(self, "malicious_ids", frozenset(self.malicious_ids))
        if self.kind == "none" and self.malicious_ids:
            raise InvalidParam("attack kind 'none' cannot have malicious clients")

    def is_malicious(self, client_id: int) -> bool:
        return client_id in self.malicious_ids


def malicious_ids_for(K: int, fraction: float) -> frozenset:
    """The lowest ``ceil(fraction * K)`` client ids."""
    if not 0.0 <= fraction < 1.0:
        raise InvalidParam("attacker fraction must be in [0, 1)")
    # guard against 0.6 * 30 landing a hair above 18
    count = math.ceil(round(fraction * K, 9))
    return frozenset(range(count))


def label_flip(ds: LabeledDataset) -> LabeledDataset:
    """Relabel class ``l`` as ``L - 1 - l``; features are shared, not copied."""
    return LabeledDataset(ds.features, (ds.num_classes - 1) - ds.labels, ds.num_classes)


def sign_flip(w: ParamVector, c: float) -> ParamVector:
    if not c > 0:
        raise InvalidParam("c must be > 0")
    return -c * np.asarray(w, dtype=np.float64)


def lie_attack(benign_updates, z: float) -> ParamVector:
    """Coordinate-wise ``mean + z * std`` (population std) of the given
    honest updates."""
    mat = stack(benign_updates)
    return mat.mean(axis=0) + z * mat.std(axis=0)


def training_data(spec: AttackSpec, client_id: int, shard: LabeledDataset) -> LabeledDataset:
    """Data the client actually trains on: flipped for label-flip attackers."""
    if spec.kind == "label_flip" and spec.is_malicious(client_id):
        return label_flip(shard)
    return shard


def apply_attack(spec: AttackSpec, client_id: int, honest_update: ParamVector,
                 shard: LabeledDataset, context=()):
    """Route one client through the configured attack.

    Returns ``(upload, train_data)``. For label flipping, ``honest_update``
    must already be the result of training on ``train_data`` (see
    :func:`training_data`); model-poisoning kinds transform it. ``context``
    holds the compromised clients' honest updates that LIE colludes over.
    """
    if spec.kind not in ATTACK_KINDS:
        raise InvalidParam(f"unknown attack kind {spec.kind!r}")
    train = training_data(spec, client_id, shard)
    if not spec.is_malicious(client_id) or spec.kind in ("none", "label_flip"):
        return honest_update, train
    if spec.kind == "sign_flip":
        return sign_flip(honest_update, spec.c), train
    ctx = list(context) if len(context) else [honest_update]
    return lie_attack(ctx, spec.z), train
