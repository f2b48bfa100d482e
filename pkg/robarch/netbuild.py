#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module netbuild

Realizes an ArchitectureSpec into an executable Network:

    stem -> stages of residual blocks -> global average pool -> linear head

   * build_network(spec, input_shape, seed)
   * class Network (forward, describe, shape_trace, weights I/O)

Every parameter is a leaf Tensor with a dotted name such as
"stages.1.blocks.0.conv1.weight". Normalization affine and activation
parameters are flagged as excluded from weight decay.

In train mode forward() differentiates through the parameters and
normalization layers use batch statistics. In eval mode parameters enter the
graph as constants and normalization uses the running statistics, so the only
gradient that can flow is the one of the input.
"""




import copy
import enum
import hashlib
import math

import numpy as np

from . import tensor as T
from .archspec import ActivationKind
from .archspec import BlockKind
from .archspec import StemKind
from .archspec import downsampling_factor
from .archspec import ensure_valid
from .common import Check
from .common import FormatError
from .common import ShapeError
from .snapshot import load_tensors
from .snapshot import save_tensors

from .logger import get_logger


logger = get_logger(__name__)




class Mode(enum.Enum):
    TRAIN = "train"
    EVAL = "eval"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_




class Parameter(T.Tensor):

    def __init__(self, name, values, decay=True):
        super().__init__(values, requires_grad=True)
        self.name = name
        self.decay = decay


def _use(param, mode):
    if param is None:
        return None
    if mode == Mode.TRAIN:
        return param
    return T.Tensor(param.values)


def _conv_shape(shape, kernel, stride, padding, channels):
    c, h, w = shape
    return (channels, (h + 2 * padding - kernel) // stride + 1, (w + 2 * padding - kernel) // stride + 1)




class Layer:

    def parameters(self):
        return []

    def buffers(self):
        return []

    def out_shape(self, shape):
        return shape

    def activations(self):
        return []


class Conv(Layer):

    def __init__(self, name, cin, cout, kernel, stride, padding, bias, rng):
        self.name = name
        self.cout = cout
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        std = math.sqrt(2.0 / (cin * kernel * kernel))
        self.weight = Parameter(f"{name}.weight", rng.normal(0.0, std, (cout, cin, kernel, kernel)))
        self.bias = Parameter(f"{name}.bias", np.zeros(cout)) if bias else None

    def __call__(self, x, mode):
        return T.conv2d(x, _use(self.weight, mode), self.stride, self.padding, _use(self.bias, mode))

    def parameters(self):
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    def out_shape(self, shape):
        return _conv_shape(shape, self.kernel, self.stride, self.padding, self.cout)


class Pad(Layer):

    def __init__(self, total):
        self.top = total // 2
        self.bottom = total - self.top

    def __call__(self, x, mode):
        return T.pad2d(x, self.top, self.bottom, self.top, self.bottom)

    def out_shape(self, shape):
        c, h, w = shape
        return (c, h + self.top + self.bottom, w + self.top + self.bottom)


class Norm(Layer):

    def __init__(self, name, channels):
        self.name = name
        self.gamma = Parameter(f"{name}.weight", np.ones(channels), decay=False)
        self.beta = Parameter(f"{name}.bias", np.zeros(channels), decay=False)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def __call__(self, x, mode):
        return T.batchnorm(x, _use(self.gamma, mode), _use(self.beta, mode),
                           self.running_mean, self.running_var, mode == Mode.TRAIN)

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [(f"{self.name}.running_mean", self.running_mean),
                (f"{self.name}.running_var", self.running_var)]


class Act(Layer):

    INITIAL = {
        ActivationKind.PRELU: {"a": 0.25},
        ActivationKind.PSILU: {"beta": 1.0},
        ActivationKind.PSSILU: {"beta": 1.0, "a": 0.1},
    }

    def __init__(self, name, kind):
        self.name = name
        self.kind = kind
        self.params = {}
        for p, value in self.INITIAL.get(kind, {}).items():
            self.params[p] = Parameter(f"{name}.{p}", np.array([value]), decay=False)

    def __call__(self, x, mode):
        return T.activation(self.kind, x, {k: _use(v, mode) for k, v in self.params.items()})

    def parameters(self):
        return list(self.params.values())

    def activations(self):
        return [self]


class MaxPool(Layer):

    def __init__(self, kernel=3, stride=2, padding=1):
        self.kernel = kernel
        self.stride = stride
        self.padding = padding

    def __call__(self, x, mode):
        return T.maxpool2d(x, self.kernel, self.stride, self.padding)

    def out_shape(self, shape):
        return _conv_shape(shape, self.kernel, self.stride, self.padding, shape[0])


class SqueezeExcite(Layer):

    def __init__(self, name, channels, ratio, rng):
        self.name = name
        self.ratio = ratio
        hidden = math.ceil(channels / ratio)
        self.w1 = Parameter(f"{name}.fc1.weight", rng.normal(0.0, math.sqrt(1.0 / channels), (hidden, channels)))
        self.b1 = Parameter(f"{name}.fc1.bias", np.zeros(hidden))
        self.w2 = Parameter(f"{name}.fc2.weight", rng.normal(0.0, math.sqrt(1.0 / hidden), (channels, hidden)))
        self.b2 = Parameter(f"{name}.fc2.bias", np.zeros(channels))

    def __call__(self, x, mode):
        return T.se_gate(x, _use(self.w1, mode), _use(self.w2, mode), self.ratio,
                         _use(self.b1, mode), _use(self.b2, mode))

    def parameters(self):
        return [self.w1, self.b1, self.w2, self.b2]


class Sequence(Layer):

    def __init__(self, layers):
        self.layers = list(layers)

    def __call__(self, x, mode):
        for layer in self.layers:
            x = layer(x, mode)
        return x

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def buffers(self):
        return [b for layer in self.layers for b in layer.buffers()]

    def out_shape(self, shape):
        for layer in self.layers:
            shape = layer.out_shape(shape)
        return shape

    def activations(self):
        return [a for layer in self.layers for a in layer.activations()]


class ResidualBlock(Layer):

    def __init__(self, branch, shortcut, post_act):
        self.branch = Sequence(branch)
        self.shortcut = Sequence(shortcut)
        self.post_act = post_act

    def __call__(self, x, mode):
        out = T.add(self.branch(x, mode), self.shortcut(x, mode))
        if self.post_act is not None:
            out = self.post_act(out, mode)
        return out

    def parameters(self):
        params = self.branch.parameters() + self.shortcut.parameters()
        if self.post_act is not None:
            params += self.post_act.parameters()
        return params

    def buffers(self):
        return self.branch.buffers() + self.shortcut.buffers()

    def out_shape(self, shape):
        return self.branch.out_shape(shape)

    def activations(self):
        acts = self.branch.activations()
        if self.post_act is not None:
            acts.append(self.post_act)
        return acts


class Head(Layer):

    def __init__(self, cin, classes, rng):
        self.classes = classes
        self.weight = Parameter("head.fc.weight", rng.normal(0.0, math.sqrt(1.0 / cin), (classes, cin)))
        self.bias = Parameter("head.fc.bias", np.zeros(classes))

    def __call__(self, x, mode):
        return T.linear(T.global_avg_pool(x), _use(self.weight, mode), _use(self.bias, mode))

    def parameters(self):
        return [self.weight, self.bias]

    def out_shape(self, shape):
        return (self.classes,)




class DescribeRow:

    def __init__(self, name, shape, count):
        self.name = name
        self.shape = tuple(shape)
        self.count = count


class Description:

    def __init__(self, rows):
        self.rows = rows
        self.total = sum(row.count for row in rows)


    def to_text(self):

        shapes = ["x".join(str(n) for n in row.shape) for row in self.rows]
        name_width = max([len(row.name) for row in self.rows] + [len("total")])
        shape_width = max([len(s) for s in shapes] + [len("shape")])
        count_width = max(len(str(self.total)), len("count"))

        lines = [f"{'name':<{name_width}}  {'shape':>{shape_width}}  {'count':>{count_width}}"]
        for row, shape in zip(self.rows, shapes):
            lines.append(f"{row.name:<{name_width}}  {shape:>{shape_width}}  {row.count:>{count_width}}")
        lines.append(f"{'total':<{name_width}}  {'':>{shape_width}}  {self.total:>{count_width}}")

        return "\n".join(lines) + "\n"


    def to_csv(self):

        lines = ["name,shape,count"]
        for row in self.rows:
            lines.append(f"{row.name},{'x'.join(str(n) for n in row.shape)},{row.count}")
        lines.append(f"total,,{self.total}")

        return "\n".join(lines) + "\n"




class Network:

    def __init__(self, spec, input_shape, stem, stages, head):

        logger.info(f"Initializing {__class__.__name__} for {spec.name}")

        self.spec = spec
        self.input_shape = tuple(input_shape)
        self.num_classes = spec.num_classes
        self.stem = stem
        self.stages = stages
        self.head = head


    def sections(self):
        return [("stem", self.stem)] + [(f"stages.{i}", s) for i, s in enumerate(self.stages)] + [("head", self.head)]


    def parameters(self):
        return [p for _, section in self.sections() for p in section.parameters()]


    def buffers(self):
        return [b for _, section in self.sections() for b in section.buffers()]


    def forward(self, x, mode=Mode.EVAL):

        if not isinstance(x, T.Tensor):
            x = T.Tensor(x)

        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise ShapeError(f"Input batch {x.shape} does not match N x {self.input_shape}")

        if x.shape[0] == 0:
            raise ShapeError("Empty input batch")

        for _, section in self.sections():
            x = section(x, mode)

        return x


    def predict(self, images):
        return self.forward(images, Mode.EVAL).values.argmax(axis=1)


    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


    def clone(self):
        return copy.deepcopy(self)


    def state(self):
        tensors = {p.name: p.values for p in self.parameters()}
        tensors.update(dict(self.buffers()))
        return tensors


    def load_state(self, tensors):

        targets = {p.name: p.values for p in self.parameters()}
        targets.update(dict(self.buffers()))

        missing = set(targets) - set(tensors)
        unexpected = set(tensors) - set(targets)
        if missing or unexpected:
            raise FormatError(f"Weights do not match network: missing {sorted(missing)}, unexpected {sorted(unexpected)}")

        for name, array in targets.items():
            values = tensors[name]
            if values.shape != array.shape:
                raise ShapeError(f"{name}: stored shape {values.shape}, network expects {array.shape}")
            array[...] = values


    def parameter_hash(self):

        digest = hashlib.sha256()
        for name, values in self.state().items():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(values, dtype="<f8").tobytes())

        return digest.hexdigest()


    def save_weights(self, path):
        save_tensors(path, self.state(), kind="weights")


    def load_weights(self, path):

        kind, tensors = load_tensors(path)
        if kind != "weights":
            raise FormatError(f"{path} holds a {kind} snapshot, not weights")

        self.load_state(tensors)


    def shape_trace(self):
        """Analytic (section, shape) pairs without running the network."""

        shape = self.input_shape
        trace = [("input", shape)]
        for label, section in self.sections():
            shape = section.out_shape(shape)
            trace.append((label, shape))

        return trace


    def activation_layers(self):
        return [a for _, section in self.sections() for a in section.activations()]


    def block_activation_layers(self):
        return [a for stage in self.stages for a in stage.activations()]


    def describe(self):
        return Description([DescribeRow(p.name, p.shape, p.values.size) for p in self.parameters()])




def _build_stem(spec, channels, rng):

    stem = spec.stem
    layers = []

    if stem.kind in (StemKind.RESNET, StemKind.POSTPONED):
        layers.append(Conv("stem.conv", channels, stem.out_width, stem.kernel, stem.conv_stride, 3, False, rng))
    elif stem.kind == StemKind.PATCHIFY:
        if stem.patch > stem.conv_stride:
            layers.append(Pad(stem.patch - stem.conv_stride))
        layers.append(Conv("stem.conv", channels, stem.out_width, stem.patch, stem.conv_stride, 0, False, rng))
    else:
        layers.append(Conv("stem.conv", channels, stem.out_width, stem.kernel, stem.conv_stride, 1, False, rng))

    layers.append(Norm("stem.norm", stem.out_width))
    layers.append(Act("stem.act", spec.activation))

    if stem.pool:
        layers.append(MaxPool(*stem.pool))

    return Sequence(layers)


def _conv_unit(spec, prefix, index, cin, cout, kernel, stride, rng):
    """conv + optional norm of position index (1-based) in a block."""

    normalized = spec.block.norm_mask[index - 1]
    padding = kernel // 2
    layers = [Conv(f"{prefix}.conv{index}", cin, cout, kernel, stride, padding, not normalized, rng)]
    if normalized:
        layers.append(Norm(f"{prefix}.norm{index}", cout))

    return layers


def _build_block(spec, prefix, cin, width, stride, rng):

    block = spec.block
    act = spec.activation
    inner = block.inner_width(width)
    cout = block.out_width(width)
    last = block.kind.conv_count

    branch = []
    if block.kind == BlockKind.BASIC:
        branch += _conv_unit(spec, prefix, 1, cin, inner, 3, stride, rng)
        if block.act_mask[0]:
            branch.append(Act(f"{prefix}.act1", act))
        branch += _conv_unit(spec, prefix, 2, inner, cout, 3, 1, rng)
        if block.se_ratio is not None:
            branch.append(SqueezeExcite(f"{prefix}.se", cout, block.se_ratio, rng))
    else:
        branch += _conv_unit(spec, prefix, 1, cin, inner, 1, stride, rng)
        if block.act_mask[0]:
            branch.append(Act(f"{prefix}.act1", act))
        branch += _conv_unit(spec, prefix, 2, inner, inner, 3, 1, rng)
        if block.se_ratio is not None:
            branch.append(SqueezeExcite(f"{prefix}.se", inner, block.se_ratio, rng))
        if block.act_mask[1]:
            branch.append(Act(f"{prefix}.act2", act))
        branch += _conv_unit(spec, prefix, 3, inner, cout, 1, 1, rng)

    shortcut = []
    if cin != cout or stride != 1:
        shortcut = [Conv(f"{prefix}.shortcut.conv", cin, cout, 1, stride, 0, False, rng),
                    Norm(f"{prefix}.shortcut.norm", cout)]

    # The last flag drives the activation after the residual add
    post_act = Act(f"{prefix}.act{last}", act) if block.act_mask[last - 1] else None

    return ResidualBlock(branch, shortcut, post_act), cout


def build_network(spec, input_shape, seed):
    """Realize spec for inputs of shape (C, H, W), initialized from seed."""

    ensure_valid(spec, structural=True)

    if len(input_shape) != 3 or not all(Check.is_positive_int(n) for n in input_shape):
        raise ShapeError(f"Invalid input shape {input_shape}")

    channels, height, width = input_shape
    factor = downsampling_factor(spec)
    if height % factor or width % factor:
        raise ShapeError(f"Input {height}x{width} is not divisible by the downsampling factor {factor}")

    rng = np.random.default_rng(seed)

    stem = _build_stem(spec, channels, rng)

    cin = spec.stem.out_width
    stages = []
    for i, stage in enumerate(spec.stages):
        blocks = []
        for j in range(stage.depth):
            if j == 0:
                stride = spec.stem.first_stage_stride if i == 0 else 2
            else:
                stride = 1
            block, cin = _build_block(spec, f"stages.{i}.blocks.{j}", cin, stage.width, stride, rng)
            blocks.append(block)
        stages.append(Sequence(blocks))

    head = Head(cin, spec.num_classes, rng)

    return Network(spec, input_shape, stem, stages, head)
