"""Reward-based loss bookkeeping, the priority sampling channel, and the training loop.

The batch reward is the negated mean-squared error, so maximizing cumulative
reward and minimizing cumulative loss pick the same parameters. Per-sample
priorities are nonnegative (mean absolute error for pose targets, the
token-level NLL for gloss targets) and induce sampling probabilities
``P(i) ~ max(r(i), eps)^eta``; the clamp keeps zero-reward samples sampleable
and all-zero reward vectors exactly uniform without perturbing strictly
positive rewards.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz

PRIORITY_EPS = 1e-6


class TrainingError(Exception):
    pass


class DivergedLoss(TrainingError):
    def __init__(self, epoch: int, batch_indices):
        super().__init__(f"non-finite loss at epoch {epoch} on batch {list(batch_indices)}")
        self.epoch = epoch
        self.batch_indices = list(batch_indices)


@dataclass
class RLConfig:
    eta: float = 1.0
    lr: float = 0.05
    batch_size: int = 8
    epochs: int = 100
    seed: int = 0
    plc_enabled: bool = False
    new_sample_priority: str = "max_seen"  # or "mean_seen"
    lr_decay: float = 0.0  # inverse-time decay coefficient per epoch
    lr_floor: float = 1e-4
    input_noise: float = 0.0  # sigma of Gaussian noise on teacher-forced decoder inputs
    hold_final: int = 1  # extra teacher-forced steps that repeat the final frame
    eval_every: int = 10
    target_dtw: float | None = None  # early stop once the dev metric reaches this

    def __post_init__(self):
        if self.eta < 0.0:
            raise ValueError("eta must be >= 0")
        if self.lr <= 0.0:
            raise ValueError("lr must be > 0")
        if self.new_sample_priority not in ("max_seen", "mean_seen"):
            raise ValueError("new_sample_priority must be max_seen or mean_seen")

    def lr_at(self, epoch: int) -> float:
        return max(self.lr_floor, self.lr / (1.0 + self.lr_decay * (epoch - 1)))


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float((diff * diff).mean())


def reward_of_batch(pred, target) -> float:
    """Reward is exactly the negated mean-squared error."""
    return -mse_loss(pred, target)


def sample_priority(pred, target) -> float:
    """Nonnegative per-sample priority: mean absolute prediction error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.abs(pred - target).mean())


def plc_probabilities(rewards, eta: float) -> np.ndarray:
    """Sampling probabilities proportional to priority^eta.

    Priorities are clamped below at 1e-6 before exponentiation, which leaves
    positive rewards untouched, keeps zero-reward samples sampleable, and
    turns an all-zero vector into the uniform distribution. eta = 0 is
    exactly uniform.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] == 0:
        raise ValueError("rewards must be a non-empty vector")
    if (r < 0).any() or not np.isfinite(r).all():
        raise ValueError("rewards must be finite and nonnegative")
    weights = np.maximum(r, PRIORITY_EPS) ** eta
    return weights / weights.sum()


def plc_sample(probabilities, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """batch_size independent draws with replacement from the given distribution."""
    p = np.asarray(probabilities, dtype=np.float64)
    if not math.isclose(p.sum(), 1.0, abs_tol=1e-6):
        raise ValueError(f"probabilities sum to {p.sum()}, expected 1")
    return rng.choice(p.shape[0], size=batch_size, replace=True, p=p)


@dataclass
class PrioritizedDataset:
    """Training samples plus the reward state driving prioritized sampling.

    samples: list of (source id sequence, target); a target is either a
    (T, 151) pose-frame array or a wrapped token-id sequence.
    """

    samples: list
    rewards: np.ndarray = field(default=None)
    seen: np.ndarray = field(default=None)
    last_update: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.samples)
        if self.rewards is None:
            self.rewards = np.zeros(n, dtype=np.float64)
        else:
            self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.seen is None:
            self.seen = np.zeros(n, dtype=bool)
        if self.last_update is None:
            self.last_update = np.zeros(n, dtype=np.int64)
        if self.rewards.shape != (n,) or (self.rewards < 0).any() or not np.isfinite(self.rewards).all():
            raise ValueError("rewards must be finite, nonnegative and one per sample")

    def __len__(self):
        return len(self.samples)

    def effective_priorities(self, new_sample_priority: str) -> np.ndarray:
        """Rewards with unseen samples held at the max (or mean) of the seen ones."""
        out = self.rewards.copy()
        if not self.seen.any():
            return np.ones(len(self), dtype=np.float64)
        if not self.seen.all():
            seen_values = self.rewards[self.seen]
            fill = seen_values.max() if new_sample_priority == "max_seen" else seen_values.mean()
            out[~self.seen] = fill
        return out

    def distribution(self, config: RLConfig) -> np.ndarray:
        if not config.plc_enabled:
            return np.full(len(self), 1.0 / len(self))
        return plc_probabilities(self.effective_priorities(config.new_sample_priority), config.eta)

    def update_priority(self, index: int, priority: float, epoch: int) -> None:
        if not np.isfinite(priority) or priority < 0:
            raise ValueError(f"bad priority {priority} for sample {index}")
        self.rewards[index] = priority
        self.seen[index] = True
        self.last_update[index] = epoch


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    mean_reward: float
    dtw_dev: float | None
    wall_ms: float
    distribution: list

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "mean_loss": self.mean_loss,
            "mean_reward": self.mean_reward,
            "dtw_dev": self.dtw_dev,
            "wall_ms": self.wall_ms,
            "distribution": self.distribution,
        }


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.records)

    def dtw_curve(self):
        return [(r.epoch, r.dtw_dev) for r in self.records if r.dtw_dev is not None]


def _is_pose_target(target) -> bool:
    return isinstance(target, np.ndarray) and target.ndim == 2


def _sample_forward(pair, source_ids, target, drop=None, noise=None, hold_final=0):
    """Per-sample loss tensor plus the fresh priority value.

    noise = (sigma, rng) perturbs the teacher-forced decoder input frames,
    which hardens autoregressive rollouts against their own prediction error.
    hold_final appends steps that repeat the last frame, anchoring the
    decoder's stopped state at counter 1.0 so rollouts terminate cleanly.
    """
    memory = pair.encode_source(source_ids, drop=drop)
    if _is_pose_target(target):
        target = target.astype(np.float32)
        if hold_final > 0:
            target = np.vstack([target] + [target[-1:]] * hold_final)
        dec_in = np.vstack([np.zeros((1, target.shape[1]), dtype=np.float32), target[:-1]])
        if noise is not None:
            sigma, rng = noise
            if sigma > 0.0:
                dec_in = dec_in + rng.normal(0.0, sigma, size=dec_in.shape).astype(np.float32)
        out = pair.decode_pose_sequence(dec_in, memory, drop=drop)
        loss = tz.mse(out, tz.constant(target))
        priority = sample_priority(out.values, target)
    else:
        ids = np.asarray(target, dtype=np.int64)
        logits = pair.decode_token_logits(ids[:-1], memory, drop=drop)
        loss = tz.cross_entropy(logits, ids[1:])
        priority = float(loss.values)
    return loss, priority


def train(pair, dataset: PrioritizedDataset, config: RLConfig, dev_eval=None) -> TrainingLog:
    """Run the seeded training loop over one encoder-decoder pair.

    Per epoch: ceil(|S|/batch) batches are drawn from the current sampling
    distribution (uniform unless the priority channel is enabled), each batch
    loss is the mean over its samples, gradients flow once per batch, and the
    freshly computed priorities replace the drawn samples' rewards. When a
    dev_eval callable is given it is invoked every ``eval_every`` epochs; if
    ``target_dtw`` is set, training stops once the dev value reaches it.
    """
    rng = np.random.default_rng(config.seed)
    params = list(pair.params.values())
    n = len(dataset)
    if n == 0:
        raise TrainingError("empty dataset")
    batches = max(1, math.ceil(n / config.batch_size))
    drop = (config_dropout(pair), rng) if config_dropout(pair) > 0 else None
    log = TrainingLog()
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        lr = config.lr_at(epoch)
        snapshot = dataset.distribution(config)
        losses = []
        for _ in range(batches):
            p = dataset.distribution(config)
            batch = plc_sample(p, config.batch_size, rng)
            with tz.Tape(), np.errstate(all="ignore"):
                total = None
                fresh = []
                for index in batch:
                    source_ids, target = dataset.samples[index]
                    loss, priority = _sample_forward(
                        pair, source_ids, target, drop=drop,
                        noise=(config.input_noise, rng) if config.input_noise > 0 else None,
                        hold_final=config.hold_final,
                    )
                    fresh.append((int(index), priority))
                    total = loss if total is None else tz.add(total, loss)
                batch_loss = tz.scale(total, 1.0 / len(batch))
                if not np.isfinite(batch_loss.values):
                    raise DivergedLoss(epoch, batch)
                tz.backward(batch_loss)
            tz.sgd_step(params, lr)
            losses.append(float(batch_loss.values))
            for index, priority in fresh:
                dataset.update_priority(index, priority, epoch)
        dtw_dev = None
        if dev_eval is not None and (epoch % config.eval_every == 0 or epoch == config.epochs):
            dtw_dev = float(dev_eval(pair))
        mean_loss = float(np.mean(losses))
        log.records.append(
            EpochRecord(
                epoch=epoch,
                mean_loss=mean_loss,
                mean_reward=-mean_loss,
                dtw_dev=dtw_dev,
                wall_ms=(time.perf_counter() - started) * 1000.0,
                distribution=snapshot.tolist(),
            )
        )
        if dtw_dev is not None and config.target_dtw is not None and dtw_dev <= config.target_dtw:
            log.stopped_early = True
            break
    return log


def config_dropout(pair) -> float:
    return float(getattr(pair.config, "dropout", 0.0))


def train_mlsf(registry, datasets_by_language: dict, config: RLConfig, dev_evals: dict | None = None) -> dict:
    """Train each registered language's pair on its own dataset, independently."""
    logs = {}
    for tag in sorted(datasets_by_language):
        pair = registry.get(tag)
        dev = dev_evals.get(tag) if dev_evals else None
        logs[tag] = train(pair, datasets_by_language[tag], config, dev_eval=dev)
    return logs
