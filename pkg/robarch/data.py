#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module data

Datasets for the toy-scale experiments.

   * load_cifar10_bin / write_cifar10_bin: CIFAR-10 binary batches, records
     of 1 label byte followed by 3 x 1024 pixel bytes (R, G and B planes)
   * gen_synthetic: class-conditional images with one cue an adversary can
     erase within a small budget and one it cannot
   * save_dataset / load_dataset: the snapshot format of the snapshot module
"""




import hashlib
import math
import os

import numpy as np

from .common import Check
from .common import ConfigError
from .common import FormatError
from .common import ensure_input_file
from .snapshot import is_snapshot
from .snapshot import load_tensors
from .snapshot import save_tensors

from .logger import get_logger


logger = get_logger(__name__)


CIFAR10_RECORD = 3073
CIFAR10_SHAPE = (3, 32, 32)
CIFAR10_CLASSES = 10

GRATING_PERIOD = 4.0




class Dataset:

    def __init__(self, images, labels, class_count, provenance):

        images = np.asarray(images, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)

        if images.ndim != 4:
            raise FormatError(f"Images must be N x C x H x W, got shape {images.shape}")

        if labels.shape != (images.shape[0],):
            raise FormatError(f"{images.shape[0]} images but labels have shape {labels.shape}")

        if not Check.is_positive_int(class_count):
            raise FormatError(f"Invalid class count {class_count}")

        if labels.size and (labels.min() < 0 or labels.max() >= class_count):
            raise FormatError(f"Labels outside [0, {class_count})")

        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise FormatError("Pixels outside [0, 1]")

        self.images = images
        self.labels = labels
        self.class_count = int(class_count)
        self.provenance = provenance


    def __len__(self):
        return self.images.shape[0]


    @property
    def sample_shape(self):
        return self.images.shape[1:]


    def subset(self, count):
        return Dataset(self.images[:count], self.labels[:count], self.class_count, self.provenance)


    def batches(self, batch_size, rng=None):
        """Yield (images, labels) batches, shuffled when rng is given."""

        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for start in range(0, len(self), batch_size):
            index = order[start:start + batch_size]
            yield self.images[index], self.labels[index]


    def digest(self):

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.images, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        h.update(str(self.class_count).encode())

        return h.hexdigest()




def load_cifar10_bin(path, limit=None):

    ensure_input_file(path)
    if limit is not None and not Check.is_natural(limit):
        raise ConfigError(f"limit must be a non-negative integer, got {limit}")

    size = os.stat(path).st_size
    if size % CIFAR10_RECORD != 0:
        raise FormatError(f"{path}: size {size} is not a multiple of {CIFAR10_RECORD}")

    count = size // CIFAR10_RECORD
    if limit is not None:
        count = min(count, limit)

    with open(path, "rb") as f:
        data = f.read(count * CIFAR10_RECORD)

    if len(data) != count * CIFAR10_RECORD:
        raise FormatError(f"{path}: truncated while reading {count} records")

    records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR10_RECORD)

    labels = records[:, 0].astype(np.int64)
    if labels.size and labels.max() >= CIFAR10_CLASSES:
        bad = int(np.argmax(labels >= CIFAR10_CLASSES))
        raise FormatError(f"{path}: record {bad} has label {labels[bad]}, expected 0..9")

    images = records[:, 1:].reshape((-1,) + CIFAR10_SHAPE).astype(np.float64) / 255.0

    logger.info(f"Loaded {len(labels)} CIFAR-10 records from {path}")

    return Dataset(images, labels, CIFAR10_CLASSES, f"cifar10:{path}")


def write_cifar10_bin(dataset, path):

    if dataset.sample_shape != CIFAR10_SHAPE or dataset.class_count > CIFAR10_CLASSES:
        raise FormatError("Only 3 x 32 x 32 datasets with up to 10 classes fit the CIFAR-10 layout")

    pixels = np.rint(dataset.images * 255.0).astype(np.uint8).reshape(len(dataset), -1)
    records = np.concatenate([dataset.labels.astype(np.uint8)[:, None], pixels], axis=1)

    with open(path, "wb") as f:
        f.write(records.tobytes())




def class_offsets(classes, shift=0.02):
    """Brightness offset of every class, spread evenly over [-shift, shift]."""

    if classes == 1:
        return np.zeros(1)
    return shift * (2.0 * np.arange(classes) / (classes - 1) - 1.0)


def class_gratings(size, classes, channels=3, amplitude=0.15):
    """Cosine grating of every class, oriented at k * pi / K."""

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    gratings = np.zeros((classes, channels, size, size))

    for k in range(classes):
        theta = math.pi * k / classes
        phase = 2.0 * math.pi * (xx * math.cos(theta) + yy * math.sin(theta)) / GRATING_PERIOD
        gratings[k] = amplitude * np.cos(phase + math.pi / 4.0)[None, :, :]

    return gratings


def class_means(size, classes, channels=3, shift=0.02, amplitude=0.15):
    """Mean image of every class, shape K x C x size x size.

    Class k is mid-grey plus a brightness offset growing with k and a cosine
    grating. The offset is smaller than the usual attack budgets, the
    grating is not.
    """

    return (0.5 + class_offsets(classes, shift)[:, None, None, None]
            + class_gratings(size, classes, channels, amplitude))


def gen_synthetic(seed, n, size, classes, channels=3, noise=0.1, shift=0.02, amplitude=0.15, conflict=0.0):
    """Class-conditional images around class_means.

    With conflict > 0 that fraction of the samples carries the grating of
    another class while keeping the brightness of its own label, so only
    the non-robust cue predicts every label.
    """

    if not Check.is_positive_int(classes) or not Check.is_natural(n) or n < classes:
        raise ConfigError(f"Need n >= classes >= 1, got n={n}, classes={classes}")

    if not Check.is_positive_int(size) or not Check.is_positive_int(channels):
        raise ConfigError(f"Invalid image geometry {channels} x {size} x {size}")

    if not Check.is_finite_real(noise) or noise < 0:
        raise ConfigError(f"Invalid noise level {noise}")

    if not Check.is_probability(conflict) or (conflict > 0 and classes < 2):
        raise ConfigError(f"Invalid conflict fraction {conflict} for {classes} classes")

    rng = np.random.default_rng(seed)

    labels = rng.permutation(np.arange(n) % classes)

    patterns = labels
    if conflict > 0:
        swapped = rng.random(n) < conflict
        patterns = labels.copy()
        patterns[swapped] = (labels[swapped] + rng.integers(1, classes, int(swapped.sum()))) % classes

    means = (0.5 + class_offsets(classes, shift)[labels, None, None, None]
             + class_gratings(size, classes, channels, amplitude)[patterns])
    images = np.clip(means + noise * rng.standard_normal((n, channels, size, size)), 0.0, 1.0)

    logger.info(f"Generated {n} synthetic samples, {classes} classes, {size}x{size}, seed {seed}")

    return Dataset(images, labels, classes, f"synthetic:seed={seed}")




def save_dataset(dataset, path):

    tensors = {
        "images": dataset.images,
        "labels": dataset.labels.astype(np.float64),
        "class_count": np.array([dataset.class_count], dtype=np.float64),
    }
    save_tensors(path, tensors, kind="dataset")


def load_dataset(path):

    kind, tensors = load_tensors(path)
    if kind != "dataset":
        raise FormatError(f"{path} holds a {kind} snapshot, not a dataset")

    for name in ("images", "labels", "class_count"):
        if name not in tensors:
            raise FormatError(f"{path}: dataset snapshot lacks '{name}'")

    return Dataset(tensors["images"], tensors["labels"].astype(np.int64),
                   int(tensors["class_count"][0]), f"snapshot:{path}")


def load_dataset_any(path, limit=None):
    """Dataset snapshot or CIFAR-10 binary file, told apart by the magic header."""

    ensure_input_file(path)
    if is_snapshot(path):
        dataset = load_dataset(path)
        return dataset if limit is None else dataset.subset(limit)

    return load_cifar10_bin(path, limit)
