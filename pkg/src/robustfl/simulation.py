"""End-to-end federated simulation: data setup, guided initialisation,
the round loop (broadcast, local training, attack, defense, evaluation)
and the alpha sweep.

All randomness is derived from ``config.seed`` through named streams, and
each client's training stream depends only on ``(seed, client_id, round)``,
so running clients on a thread pool cannot change any result.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aggregators as agg
from . import dataset as ds
from .attacks import AttackSpec, apply_attack, training_data
from .config import SimConfig
from .detector import detection_metrics
from .errors import ConfigError, IoError, RobustFLError, SimulationError
from .runlog import RoundRecord
from .smoothing import SmoothingState, init_guided
from .trainer import ModelSpec, TrainConfig, evaluate, init_params, sgd_train

log = logging.getLogger(__name__)

# stream tags for derive_seed
_INIT, _PARTITION, _BLOBS, _GUIDING, _PRETRAIN, _CLIENT = range(6)


def derive_seed(*keys: int) -> int:
    """A 63-bit seed that depends only on ``keys``."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


_MNIST_NAMES = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


def find_mnist_files(directory) -> dict:
    """Locate the four IDX files (plain or ``.gz``) in ``directory``."""
    directory = Path(directory)
    found = {}
    for key, names in _MNIST_NAMES.items():
        for name in names:
            for candidate in (directory / name, directory / (name + ".gz")):
                if candidate.exists():
                    found[key] = candidate
                    break
            if key in found:
                break
        else:
            raise IoError(f"no {names[0]} (or .gz) in {directory}")
    return found


@functools.lru_cache(maxsize=8)
def _cached_mnist(directory: str, train_limit, test_limit):
    files = find_mnist_files(directory)
    train = ds.load_mnist(files["train_images"], files["train_labels"], train_limit)
    test = ds.load_mnist(files["test_images"], files["test_labels"], test_limit)
    return train, test


def load_data(config: SimConfig):
    """``(train, test)`` datasets for the configured source."""
    d = config.data
    if d.source == "mnist":
        return _cached_mnist(str(d.mnist_dir), d.train_limit, d.test_limit)
    full = ds.synth_blobs(d.n_per_class + d.test_per_class, d.num_classes, d.n_features,
                          d.spread, derive_seed(config.seed, _BLOBS))
    per = d.n_per_class + d.test_per_class
    local = np.arange(full.labels.size) % per
    return (full.subset(np.flatnonzero(local < d.n_per_class)),
            full.subset(np.flatnonzero(local >= d.n_per_class)))


@dataclass
class Setup:
    spec: ModelSpec
    shards: list
    test: ds.LabeledDataset
    guiding: ds.LabeledDataset
    attack: AttackSpec


def prepare(config: SimConfig) -> Setup:
    train, test = load_data(config)
    K = config.num_clients
    pseed = derive_seed(config.seed, _PARTITION)
    if config.data.partition == "iid":
        part = ds.partition_iid(train, K, pseed)
    else:
        part = ds.partition_noniid(train, K, config.data.q, pseed)
    guiding, test = ds.sample_guiding(test, config.guiding.size,
                                      derive_seed(config.seed, _GUIDING))
    spec = ModelSpec((train.n_features, *config.hidden, train.num_classes))
    attack = AttackSpec(config.attack.kind, config.attack.c, config.attack.z,
                        config.malicious_ids)
    return Setup(spec, part.shards(train), test, guiding, attack)


@dataclass
class SimulationResult:
    records: list
    global_model: np.ndarray
    state: SmoothingState | None
    malicious_ids: frozenset
    initial_accuracy: float


def _train_cfg(config: SimConfig, seed: int, lr: float | None = None) -> TrainConfig:
    t = config.training
    return TrainConfig(t.local_iterations, t.batch_size, lr or t.learning_rate, seed)


def _client_uploads(config: SimConfig, setup: Setup, w: np.ndarray, rnd: int,
                    pool: ThreadPoolExecutor | None) -> list:
    attack = setup.attack

    def local(k):
        data = training_data(attack, k, setup.shards[k])
        cfg = _train_cfg(config, derive_seed(config.seed, _CLIENT, k, rnd))
        return sgd_train(w, setup.spec, data, cfg)

    ids = range(config.num_clients)
    honest = list(pool.map(local, ids)) if pool else [local(k) for k in ids]
    # LIE needs every colluder's honest model before any upload is formed
    context = [honest[k] for k in sorted(attack.malicious_ids)]
    uploads = []
    for k in ids:
        params, _ = apply_attack(attack, k, honest[k], setup.shards[k], context)
        uploads.append(agg.ClientUpdate(k, params, len(setup.shards[k])))
    return uploads


def _defend(config: SimConfig, updates: list, state, truth: frozenset):
    """Aggregate with the configured rule. Returns ``(w_next, state, fields)``
    where ``fields`` feeds the RoundRecord."""
    d = config.defense
    K = len(updates)
    all_ids = [u.client_id for u in updates]
    f = len(truth) if d.f is None else d.f
    fields = {"benign_ids": all_ids, "malicious_ids": []}
    kept = None
    if d.name == "robustfl":
        w, state, report = agg.robustfl_round(updates, state)
        kept = report.benign_ids
        fields.update(scores=[s for _, s in report.scores], sc=report.sc, lc=report.lc)
    elif d.name == "fedavg":
        w = agg.fedavg(updates)
    elif d.name == "median":
        w = agg.coordinate_median(updates)
    elif d.name == "trimmed_mean":
        beta = min(f, (K - 1) // 2) if d.beta is None else d.beta
        w = agg.trimmed_mean(updates, beta)
    elif d.name == "multi_krum":
        kept = agg.multi_krum_select(updates, f, d.m)
        w = agg.multi_krum(updates, f, d.m)
    elif d.name == "faba":
        kept = agg.faba_select(updates, f)
        w = agg.faba(updates, f)
    else:
        raise ConfigError(f"unknown defense {d.name!r}")
    if kept is not None:
        kept = set(kept)
        flagged = [i for i in all_ids if i not in kept]
        fields["benign_ids"] = sorted(kept)
        fields["malicious_ids"] = flagged
        p, r, f1 = detection_metrics(flagged, truth, all_ids)
        fields["detection"] = {"precision": p, "recall": r, "f1": f1}
    return w, state, fields


def simulate(config: SimConfig) -> SimulationResult:
    """Run the full experiment described by ``config``."""
    config.validate()
    setup = prepare(config)
    truth = setup.attack.malicious_ids
    w = init_params(setup.spec, derive_seed(config.seed, _INIT))
    state = None
    if config.defense.name == "robustfl":
        # round 0: server pre-trains on its clean guiding set
        w, state = init_guided(w, setup.spec, setup.guiding, config.guiding.epochs,
                               _train_cfg(config, derive_seed(config.seed, _PRETRAIN),
                                          config.guiding.learning_rate),
                               config.defense.alpha)
    initial_accuracy = evaluate(w, setup.spec, setup.test)
    records = []
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for rnd in range(1, config.rounds + 1):
            try:
                updates = _client_uploads(config, setup, w, rnd, pool)
                w, state, fields = _defend(config, updates, state, truth)
                acc = evaluate(w, setup.spec, setup.test)
            except RobustFLError as exc:
                raise SimulationError(f"round {rnd}: {exc}", rnd, records) from exc
            records.append(RoundRecord(rnd, config.defense.name, acc, **fields))
            log.debug("round %d accuracy %.4f", rnd, acc)
    finally:
        if pool:
            pool.shutdown()
    return SimulationResult(records, w, state, truth, initial_accuracy)


def run(config: SimConfig) -> list[RoundRecord]:
    return simulate(config).records


def sweep_alpha(base: SimConfig, alphas) -> list[tuple[float, float]]:
    """Final-round accuracy of the defended run for each smoothing factor."""
    alphas = [float(a) for a in alphas]
    bad = [a for a in alphas if not 0.0 < a < 1.0]
    if bad:
        raise ConfigError(f"alpha must lie in (0, 1): {bad}")
    if base.defense.name != "robustfl":
        raise ConfigError("alpha sweep requires defense 'robustfl'")
    table = []
    for a in alphas:
        records = run(base.replace(defense__alpha=a))
        table.append((a, records[-1].accuracy))
    return table
