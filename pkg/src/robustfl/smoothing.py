"""Second-order exponential smoothing over the sequence of global models,
and the one-step-ahead linear forecast used to judge client uploads."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LabeledDataset
from .errors import DimensionMismatch, InvalidParam, NonFiniteResult, TruncatedFile
from .param_space import ParamVector, axpy
from .trainer import ModelSpec, TrainConfig, sgd_train

DEFAULT_ALPHA = 0.8


@dataclass(frozen=True, eq=False)
class SmoothingState:
    """First-order value ``s1``, second-order value ``s2`` and factor ``alpha``."""

    s1: ParamVector
    s2: ParamVector
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        s1 = np.array(self.s1, dtype=np.float64)
        s2 = np.array(self.s2, dtype=np.float64)
        if s1.ndim != 1 or s1.shape != s2.shape or s1.size == 0:
            raise DimensionMismatch("s1 and s2 must be 1-D vectors of equal dim")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParam(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        s1.flags.writeable = False
        s2.flags.writeable = False
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def dim(self) -> int:
        return int(self.s1.size)

    @classmethod
    def from_model(cls, w: ParamVector, alpha: float = DEFAULT_ALPHA) -> "SmoothingState":
        """Both smoothing values seeded with the same model."""
        return cls(w, w, alpha)


def init_guided(w0: ParamVector, spec: ModelSpec, guiding: LabeledDataset,
                T_g: int, cfg: TrainConfig, alpha: float = DEFAULT_ALPHA):
    """Pre-train ``w0`` on the server's clean guiding set for ``T_g`` passes.

    Returns ``(w0_trained, state)`` with ``s1 == s2 == w0_trained``, so the
    first forecast is exactly the pre-trained model.
    """
    if T_g < 1:
        raise InvalidParam("T_g must be >= 1")
    guided_cfg = TrainConfig(T_g, cfg.batch_size, cfg.learning_rate, cfg.seed)
    w = sgd_train(w0, spec, guiding, guided_cfg)
    return w, SmoothingState.from_model(w, alpha)


def update(state: SmoothingState, w_new: ParamVector) -> SmoothingState:
    """Fold the newest global model into both smoothing values.

    The second-order value is smoothed against the already updated
    first-order value. Written as ``s + alpha * (target - s)``, which equals
    ``alpha * target + (1 - alpha) * s`` and leaves ``s`` bit-exactly
    unchanged when ``target == s``.
    """
    w_new = np.asarray(w_new, dtype=np.float64)
    if w_new.shape != state.s1.shape:
        raise DimensionMismatch(f"state dim {state.dim}, model dim {w_new.size}")
    a = state.alpha
    s1 = axpy(1.0, state.s1, a, axpy(1.0, w_new, -1.0, state.s1))
    s2 = axpy(1.0, state.s2, a, axpy(1.0, s1, -1.0, state.s2))
    return SmoothingState(s1, s2, a)


def predict(state: SmoothingState) -> ParamVector:
    """Linear-trend forecast of the next global model.

    Computes ``s1 + (s1 - s2) / (1 - alpha)``, algebraically equal to
    ``(2 - alpha)/(1 - alpha) * s1 - 1/(1 - alpha) * s2``. This arrangement
    returns ``s1`` bit-exactly whenever ``s1 == s2``.
    """
    gap = 1.0 - state.alpha
    if gap <= 0.0:
        raise NonFiniteResult("alpha numerically equal to 1")
    trend = axpy(1.0, state.s1, -1.0, state.s2)
    return axpy(1.0, state.s1, 1.0 / gap, trend)


_MAGIC = b"RFLSMTH1"


def save_state(state: SmoothingState, path) -> None:
    """Write ``magic | dim:u64 | alpha:f64 | s1:f64[dim] | s2:f64[dim]``,
    all little-endian."""
    with open(Path(path), "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Qd", state.dim, state.alpha))
        fh.write(state.s1.astype("<f8").tobytes())
        fh.write(state.s2.astype("<f8").tobytes())


def load_state(path) -> SmoothingState:
    raw = Path(path).read_bytes()
    head = len(_MAGIC) + 16
    if raw[:len(_MAGIC)] != _MAGIC or len(raw) < head:
        raise TruncatedFile(f"{path}: not a smoothing-state checkpoint")
    dim, alpha = struct.unpack("<Qd", raw[len(_MAGIC):head])
    if len(raw) != head + 16 * dim:
        raise TruncatedFile(f"{path}: expected {dim} coordinates per vector")
    body = np.frombuffer(raw[head:], dtype="<f8").astype(np.float64)
    return SmoothingState(body[:dim], body[dim:], alpha)
