#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module adversarial

l-infinity attacks and adversarial training.

   * fgsm, pgd: untargeted attacks maximizing the loss of the true label
   * trades_loss: clean cross-entropy plus a KL robustness term
   * train: Standard, Fast-AT, SAT and TRADES training with SGD and a
     triangular learning-rate cycle
   * evaluate_clean, evaluate_robust, robustness_curve

Attacks always run the network in eval mode, so the adversarial example of a
sample does not depend on the other samples of its batch. Anything exposing
forward(x, mode) -> logits can be attacked.
"""




import dataclasses
import enum
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import tensor as T
from .common import Check
from .common import ConfigError
from .common import DivergenceError
from .common import RangeError
from .common import format_real
from .netbuild import Mode

from .logger import get_logger


logger = get_logger(__name__)


PGD_ALPHA_SCALE = 2.5
FAST_AT_ALPHA_SCALE = 1.25
# Any positive step works on a zero-radius ball
ZERO_BALL_ALPHA = 1.0 / 255.0
TRADES_INIT_STD = 0.001




@dataclasses.dataclass(frozen=True)
class AttackConfig:
    eps: float
    alpha: float
    steps: int
    random_start: bool = False
    best_iterate: bool = False

    def __post_init__(self):

        if not Check.is_finite_real(self.eps) or self.eps < 0:
            raise ConfigError(f"Invalid eps {self.eps}")

        if not Check.is_natural(self.steps):
            raise ConfigError(f"Invalid step count {self.steps}")

        if not Check.is_finite_real(self.alpha) or self.alpha < 0:
            raise ConfigError(f"Invalid alpha {self.alpha}")

        if self.steps >= 1 and self.alpha <= 0:
            raise ConfigError("alpha must be positive when steps >= 1")

    @classmethod
    def pgd(cls, eps, steps, random_start=False, best_iterate=False):
        alpha = PGD_ALPHA_SCALE * eps / steps if eps > 0 and steps > 0 else ZERO_BALL_ALPHA
        return cls(eps, alpha, steps, random_start, best_iterate)

    @classmethod
    def fast_at(cls, eps):
        alpha = FAST_AT_ALPHA_SCALE * eps if eps > 0 else ZERO_BALL_ALPHA
        return cls(eps, alpha, 1, True, False)


class TrainMethod(enum.Enum):
    STANDARD = "standard"
    FAST_AT = "fastat"
    SAT = "sat"
    TRADES = "trades"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    method: TrainMethod
    epochs: int
    batch_size: int
    lr_max: float
    weight_decay: float
    seed: int
    attack: AttackConfig
    beta: float = 6.0
    momentum: float = 0.9
    eval_samples: int = 0
    eval_attack: AttackConfig = None

    def __post_init__(self):

        if not isinstance(self.method, TrainMethod):
            raise ConfigError(f"Invalid training method {self.method}")

        if not Check.is_natural(self.epochs):
            raise ConfigError(f"Invalid epoch count {self.epochs}")

        if not Check.is_positive_int(self.batch_size):
            raise ConfigError(f"Invalid batch size {self.batch_size}")

        if not Check.is_finite_real(self.lr_max) or self.lr_max <= 0:
            raise ConfigError(f"lr_max must be positive, got {self.lr_max}")

        if not Check.is_finite_real(self.weight_decay) or self.weight_decay < 0:
            raise ConfigError(f"Invalid weight decay {self.weight_decay}")

        if not Check.is_natural(self.seed):
            raise ConfigError(f"Invalid seed {self.seed}")

        if not isinstance(self.attack, AttackConfig):
            raise ConfigError("attack must be an AttackConfig")

        if not Check.is_finite_real(self.beta) or self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")

        if not Check.is_finite_real(self.momentum) or not 0 <= self.momentum < 1:
            raise ConfigError(f"Invalid momentum {self.momentum}")

        if not Check.is_natural(self.eval_samples):
            raise ConfigError(f"Invalid eval sample count {self.eval_samples}")

        if self.eval_attack is not None and not isinstance(self.eval_attack, AttackConfig):
            raise ConfigError("eval_attack must be an AttackConfig")

    @property
    def robust_eval_attack(self):
        if self.eval_attack is not None:
            return self.eval_attack
        return AttackConfig.pgd(self.attack.eps, 10)




class CrossEntropyObjective:

    def __call__(self, logits, y):
        return T.cross_entropy(logits, y, reduction="none")


class KlObjective:
    """KL(softmax(f(x_adv)) || softmax(reference)) per sample."""

    def __init__(self, reference_logits):
        self.reference = T.Tensor(reference_logits)

    def __call__(self, logits, y):
        return T.kl_divergence(logits, self.reference, reduction="none")


def _loss_and_gradient(net, x_adv, y, objective):

    xt = T.Tensor(x_adv, requires_grad=True)
    losses = objective(net.forward(xt, Mode.EVAL), y)
    T.backward(T.tensor_sum(losses))

    return losses.values.copy(), xt.grad


def _losses(net, x_adv, y, objective):
    return objective(net.forward(x_adv, Mode.EVAL), y).values.copy()


def _project(x_adv, x, eps):
    return np.clip(np.clip(x_adv, x - eps, x + eps), 0.0, 1.0)




def fgsm(net, x, y, eps, alpha, random_start, rng=None):

    x = np.asarray(x, dtype=np.float64)

    if random_start:
        rng = rng if rng is not None else np.random.default_rng()
        delta = rng.uniform(-eps, eps, x.shape)
    else:
        delta = np.zeros_like(x)

    start = np.clip(x + delta, 0.0, 1.0)
    _, grad = _loss_and_gradient(net, start, y, CrossEntropyObjective())

    delta = np.clip(delta + alpha * np.sign(grad), -eps, eps)

    return np.clip(x + delta, 0.0, 1.0)


def pgd_history(net, x, y, cfg, rng=None, objective=None, init=None):
    """PGD returning (x_adv, best losses after each iterate).

    The history has steps + 1 rows when best_iterate is set, none otherwise.
    init overrides the starting perturbation.
    """

    x = np.asarray(x, dtype=np.float64)
    objective = objective if objective is not None else CrossEntropyObjective()

    if init is not None:
        delta = init
    elif cfg.random_start:
        rng = rng if rng is not None else np.random.default_rng()
        delta = rng.uniform(-cfg.eps, cfg.eps, x.shape)
    else:
        delta = np.zeros_like(x)

    x_adv = _project(x + delta, x, cfg.eps)

    best = x_adv.copy()
    best_loss = np.full(x.shape[0], -np.inf)
    history = []

    def keep_best(candidate, losses):
        better = losses > best_loss
        best[better] = candidate[better]
        best_loss[better] = losses[better]
        history.append(best_loss.copy())

    for step in range(cfg.steps):
        losses, grad = _loss_and_gradient(net, x_adv, y, objective)
        if cfg.best_iterate:
            keep_best(x_adv, losses)
        x_adv = _project(x_adv + cfg.alpha * np.sign(grad), x, cfg.eps)
        logger.debug(f"PGD step {step}: mean loss {losses.mean():.6f}")

    if not cfg.best_iterate:
        return x_adv, history

    keep_best(x_adv, _losses(net, x_adv, y, objective))

    return best, history


def pgd(net, x, y, cfg, rng=None, objective=None, init=None):
    return pgd_history(net, x, y, cfg, rng, objective, init)[0]




def trades_loss(net, x, y, beta, attack, rng=None, mode=Mode.TRAIN):
    """CE(f(x), y) + beta * KL(softmax(f(x_adv)) || softmax(f(x))).

    x_adv maximizes the KL term. Without random start the search begins from
    a tiny Gaussian perturbation, where the KL gradient is not zero.
    """

    if not Check.is_finite_real(beta) or beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")

    x = np.asarray(x, dtype=np.float64)

    clean_logits = net.forward(x, mode)
    loss = T.cross_entropy(clean_logits, y)

    if beta == 0:
        return loss

    init = None
    if not attack.random_start and attack.eps > 0:
        rng = rng if rng is not None else np.random.default_rng()
        init = TRADES_INIT_STD * rng.standard_normal(x.shape)

    reference = net.forward(x, Mode.EVAL).values
    x_adv = pgd(net, x, y, attack, rng, KlObjective(reference), init)

    adv_logits = net.forward(x_adv, mode)
    robust = T.kl_divergence(adv_logits, clean_logits)

    return T.add(loss, T.mul(robust, beta))




def cyclic_lr(t, T_total, lr_max):
    """Triangular cycle: 0 at t=0, lr_max at T/2, 0 at T."""

    if not T_total > 0:
        raise RangeError(f"Cycle length must be positive, got {T_total}")

    if not 0 <= t <= T_total:
        raise RangeError(f"t={t} outside [0, {T_total}]")

    if t <= T_total / 2:
        return lr_max * 2.0 * t / T_total

    return lr_max * 2.0 * (1.0 - t / T_total)


class SGD:

    def __init__(self, params, momentum=0.9, weight_decay=0.0):

        logger.info(f"Initializing {__class__.__name__}")

        self.params = list(params)
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(p.values) for p in self.params]


    def step(self, lr):

        for p, v in zip(self.params, self.velocity):
            grad = p.grad
            # Normalization affine and activation parameters skip decay
            if p.decay and self.weight_decay:
                grad = grad + self.weight_decay * p.values
            v *= self.momentum
            v += grad
            p.values -= lr * v




class EpochRow:

    def __init__(self, epoch, lr, clean_loss, clean_acc, robust_acc):
        self.epoch = epoch
        self.lr = lr
        self.clean_loss = clean_loss
        self.clean_acc = clean_acc
        self.robust_acc = robust_acc


class TrainReport:

    HEADER = "epoch,lr,clean_loss,clean_acc,robust_acc"

    def __init__(self):
        self.rows = []


    def __len__(self):
        return len(self.rows)


    def append(self, row):
        self.rows.append(row)


    def to_csv(self):

        lines = [self.HEADER]
        for row in self.rows:
            robust = "" if row.robust_acc is None else format_real(row.robust_acc)
            lines.append(f"{row.epoch},{format_real(row.lr)},{format_real(row.clean_loss)},"
                         f"{format_real(row.clean_acc)},{robust}")

        return "\n".join(lines) + "\n"




def evaluate_clean(net, dataset, batch_size=256):
    """(mean cross-entropy, accuracy) in eval mode."""

    total_loss = 0.0
    correct = 0
    for images, labels in dataset.batches(batch_size):
        logits = net.forward(images, Mode.EVAL)
        total_loss += T.cross_entropy(logits, labels, reduction="sum").item()
        correct += int((logits.values.argmax(axis=1) == labels).sum())

    return total_loss / len(dataset), correct / len(dataset)


def evaluate_robust(net, dataset, attack, seed=0, batch_size=128, workers=1):
    """Fraction of samples still classified correctly under pgd.

    Batches are attacked on a frozen clone of net, possibly by several
    threads. Each batch draws from its own random stream derived from
    (seed, batch index), so the result does not depend on workers.
    """

    if len(dataset) == 0:
        return 0.0

    frozen = net.clone()
    batches = list(dataset.batches(batch_size))

    def run(index):
        images, labels = batches[index]
        rng = np.random.default_rng([seed, index])
        x_adv = pgd(frozen, images, labels, attack, rng)
        return int((frozen.predict(x_adv) == labels).sum())

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        correct = sum(pool.map(run, range(len(batches))))

    logger.info(f"Robust accuracy at eps={attack.eps:.5f}, {attack.steps} steps: {correct}/{len(dataset)}")

    return correct / len(dataset)


def robustness_curve(net, dataset, eps_values, steps=10, seed=0, batch_size=128, workers=1):
    """(eps, robust accuracy) pairs for best-iterate PGD sharing one start seed."""

    curve = []
    for eps in eps_values:
        attack = AttackConfig.pgd(eps, steps, random_start=True, best_iterate=True)
        curve.append((eps, evaluate_robust(net, dataset, attack, seed, batch_size, workers)))

    return curve




def _training_loss(net, images, labels, cfg, rng):

    method = cfg.method
    attack = cfg.attack

    if method == TrainMethod.STANDARD:
        return T.cross_entropy(net.forward(images, Mode.TRAIN), labels)

    if method == TrainMethod.FAST_AT:
        x_adv = fgsm(net, images, labels, attack.eps, attack.alpha, attack.random_start, rng)
        return T.cross_entropy(net.forward(x_adv, Mode.TRAIN), labels)

    if method == TrainMethod.SAT:
        x_adv = pgd(net, images, labels, attack, rng)
        return T.cross_entropy(net.forward(x_adv, Mode.TRAIN), labels)

    return trades_loss(net, images, labels, cfg.beta, attack, rng)


def train(net, dataset, cfg):
    """Train net in place and return the per-epoch TrainReport."""

    if len(dataset) == 0:
        raise ConfigError("Cannot train on an empty dataset")

    report = TrainReport()
    if cfg.epochs == 0:
        return report

    rng = np.random.default_rng(cfg.seed)
    optimizer = SGD(net.parameters(), cfg.momentum, cfg.weight_decay)

    steps_per_epoch = math.ceil(len(dataset) / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    step = 0
    lr = 0.0

    logger.info(f"Training {net.spec.name} with {cfg.method.value} for {cfg.epochs} epochs, {total_steps} steps")

    for epoch in range(cfg.epochs):

        for images, labels in dataset.batches(cfg.batch_size, rng):
            # Learning rate at the middle of the step
            lr = cyclic_lr(step + 0.5, total_steps, cfg.lr_max)

            loss = _training_loss(net, images, labels, cfg, rng)
            if not math.isfinite(loss.item()):
                logger.error(f"Non-finite training loss in epoch {epoch}")
                raise DivergenceError(epoch)

            net.zero_grad()
            T.backward(loss)
            optimizer.step(lr)
            step += 1

        clean_loss, clean_acc = evaluate_clean(net, dataset)
        if not math.isfinite(clean_loss):
            logger.error(f"Non-finite evaluation loss in epoch {epoch}")
            raise DivergenceError(epoch)

        robust_acc = None
        if cfg.eval_samples > 0:
            robust_acc = evaluate_robust(net, dataset.subset(cfg.eval_samples), cfg.robust_eval_attack, cfg.seed)

        report.append(EpochRow(epoch, lr, clean_loss, clean_acc, robust_acc))

        logger.info(f"Epoch {epoch}: lr {lr:.5f}, clean loss {clean_loss:.4f}, clean acc {clean_acc:.4f}, robust acc {robust_acc}")

    return report
