"""Prediction-based Byzantine-robust federated learning simulator."""

from .aggregators import (ClientUpdate, coordinate_median, faba, fedavg, multi_krum,
                          robustfl_round, trimmed_mean)
from .attacks import AttackSpec, apply_attack, label_flip, lie_attack, sign_flip
from .config import SimConfig, load_config
from .dataset import (LabeledDataset, Partition, load_mnist, partition_iid,
                      partition_noniid, synth_blobs)
from .detector import ScoreReport, detection_metrics, kmeans2_1d, score_updates, select_benign
from .param_space import axpy, l2_distance, mean
from .runlog import RoundRecord, read_log, summarize, write_log
from .simulation import run, simulate, sweep_alpha
from .smoothing import SmoothingState, init_guided, predict, update
from .trainer import ModelSpec, TrainConfig, evaluate, init_params, sgd_train

__version__ = "0.1.0"
