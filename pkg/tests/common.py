#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors


import copy
import os

import numpy as np

from robarch import ActivationKind
from robarch import ArchitectureSpec
from robarch import BlockKind
from robarch import BlockSpec
from robarch import Mode
from robarch import StemKind
from robarch import StemSpec
from robarch import Tensor
from robarch import backward
from robarch import downsampling_factor
from robarch import linear
from robarch import load_spec
from robarch import mul
from robarch import reshape
from robarch import tensor_sum


SPECS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "specs")


class TestMode:
    QUICK = 1
    FULL = 2


def current_mode():

    env_var = os.getenv("ROBARCH_TESTENV")
    if env_var == "FULL":
        return TestMode.FULL

    return TestMode.QUICK




def fixture_path(name):
    return os.path.join(SPECS_DIR, name)


def fixture_spec(name):
    return load_spec(fixture_path(name))


def fixture_text(name):
    with open(fixture_path(name), encoding="utf-8") as f:
        return f.read()




def toy_spec(stem=None, depths=(1, 1), widths=(4, 8), block=None, activation=ActivationKind.RELU, classes=2):

    if stem is None:
        stem = StemSpec(StemKind.CIFAR, 4)
    if block is None:
        block = BlockSpec.basic()

    spec = ArchitectureSpec("toy", stem, (), block, activation, classes)
    return spec.with_stages(list(depths), list(widths))


def random_spec(rng):
    """A small valid spec exercising every stem, block and activation kind."""

    stem_kind = list(StemKind)[rng.integers(len(StemKind))]
    out_width = int(rng.integers(1, 9))
    if stem_kind == StemKind.PATCHIFY:
        patch = int(rng.integers(1, 5))
        stem = StemSpec.patchify(patch, int(rng.integers(1, patch + 1)), out_width)
    else:
        stem = StemSpec(stem_kind, out_width)

    block_kind = list(BlockKind)[rng.integers(len(BlockKind))]
    convs = block_kind.conv_count
    act_mask = tuple(bool(b) for b in rng.integers(0, 2, convs))
    norm_mask = tuple(bool(b) for b in rng.integers(0, 2, convs))
    se_ratio = None if rng.random() < 0.5 else int(rng.integers(1, 9))
    if block_kind == BlockKind.BASIC:
        block = BlockSpec(block_kind, 1, act_mask, norm_mask, se_ratio)
    else:
        block = BlockSpec(block_kind, int(rng.integers(1, 5)), act_mask, norm_mask, se_ratio,
                          int(rng.integers(16, 129)))

    activation = list(ActivationKind)[rng.integers(len(ActivationKind))]

    n = int(rng.integers(2, 5))
    depths = [int(d) for d in rng.integers(1, 4, n)]
    widths = [int(w) for w in rng.integers(1, 13, n)]

    spec = ArchitectureSpec("random", stem, (), block, activation, int(rng.integers(1, 6)))
    return spec.with_stages(depths, widths)


def input_side(spec, multiple=1):
    """Smallest square side the spec can be realized on."""
    return downsampling_factor(spec) * multiple




class LinearNet:
    """Linear classifier exposing the forward/predict/clone surface of Network."""

    def __init__(self, weight, bias):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    def forward(self, x, mode=Mode.EVAL):
        if not isinstance(x, Tensor):
            x = Tensor(x)
        x = reshape(x, (x.shape[0], -1))
        return linear(x, Tensor(self.weight), Tensor(self.bias))

    def predict(self, x):
        return self.forward(x).values.argmax(axis=1)

    def clone(self):
        return copy.deepcopy(self)




def weighted_sum(out, weights):
    """Scalar sum(out * weights), a loss with nonzero gradient everywhere."""
    return tensor_sum(mul(out, Tensor(weights)))


def analytic_grad(f, x):

    xt = Tensor(np.array(x, dtype=np.float64), requires_grad=True)
    backward(f(xt))

    return xt.grad


def significant_coords(f, x, threshold=1e-4, away_from=None, margin=1e-3):
    """Flat indices with a gradient large enough for a relative check.

    away_from is an array shaped like x; indices where it is within margin
    of zero are skipped, e.g. pre-activations close to a ReLU kink.
    """

    grad = analytic_grad(f, x).reshape(-1)
    keep = np.abs(grad) > threshold
    if away_from is not None:
        keep &= np.abs(np.asarray(away_from).reshape(-1)) > margin

    return [int(i) for i in np.flatnonzero(keep)]
