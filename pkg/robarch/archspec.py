#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module archspec

Declarative description of a residual CNN: a stem, n stages of residual
blocks and a classification head.

This module deals with architecture descriptions only. It never builds
tensors: the WD ratio, the parameter count and the robustify transforms are
analytic functions of an ArchitectureSpec. Realizing a spec into a runnable
network is done by the netbuild module.

All the types are immutable, so every transform returns a new spec.
"""




import dataclasses
import enum
import math

from .common import Check
from .common import NeedsExplicitStages
from .common import RangeError
from .common import SpecError
from .common import SpecValidationError

from .logger import get_logger


logger = get_logger(__name__)


STEM_MAX_WIDTH = 1024
DEFAULT_BASE_WIDTH = 64
ROBUST_STEM_WIDTH = 96
ROBUST_SE_RATIO = 4
PATCHIFY_FULL_STRIDE = 4




class StemKind(enum.Enum):
    RESNET = "ResNetStem"
    POSTPONED = "PostponedDownsampling"
    PATCHIFY = "Patchify"
    CIFAR = "CifarStem"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_


class BlockKind(enum.Enum):
    BASIC = "Basic"
    BOTTLENECK = "Bottleneck"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_

    @property
    def conv_count(self):
        return 2 if self == BlockKind.BASIC else 3


class ActivationKind(enum.Enum):
    RELU = "ReLU"
    GELU = "GELU"
    SILU = "SiLU"
    PRELU = "PReLU"
    PSILU = "PSiLU"
    PSSILU = "PSSiLU"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_

    @property
    def param_count(self):
        if self in (ActivationKind.PRELU, ActivationKind.PSILU):
            return 1
        if self == ActivationKind.PSSILU:
            return 2
        return 0


class RobustifyPrinciple(enum.Enum):
    DEPTH_WIDTH = "DepthWidth"
    CONV_STEM = "ConvStem"
    SQUEEZE_EXCITE = "SqueezeExcite"
    SMOOTH_ACT = "SmoothAct"

    @classmethod
    def contains(cls, value):
        return value in cls._value2member_map_


ROADMAP = (RobustifyPrinciple.DEPTH_WIDTH, RobustifyPrinciple.CONV_STEM,
           RobustifyPrinciple.SQUEEZE_EXCITE, RobustifyPrinciple.SMOOTH_ACT)




@dataclasses.dataclass(frozen=True)
class StageSpec:
    depth: int
    width: int


@dataclasses.dataclass(frozen=True)
class StemSpec:
    kind: StemKind
    out_width: int
    patch: int = None
    stride: int = None

    @classmethod
    def patchify(cls, patch, stride, out_width):
        return cls(StemKind.PATCHIFY, out_width, patch, stride)

    @property
    def kernel(self):
        if self.kind in (StemKind.RESNET, StemKind.POSTPONED):
            return 7
        if self.kind == StemKind.PATCHIFY:
            return self.patch
        return 3

    @property
    def conv_stride(self):
        """Stride of the stem convolution.

        Patchify strides below 4 run on the stride-2 grid (stride 1 keeps its
        dense convolution and pools afterwards) so that stem and stage 1
        together still downsample by 4.
        """
        if self.kind in (StemKind.RESNET, StemKind.POSTPONED):
            return 2
        if self.kind == StemKind.PATCHIFY:
            if self.stride >= PATCHIFY_FULL_STRIDE or self.stride == 1:
                return self.stride
            return 2
        return 1

    @property
    def pool(self):
        """(kernel, stride, padding) of the max-pool closing the stem, or None."""
        if self.kind == StemKind.RESNET:
            return (3, 2, 1)
        if self.kind == StemKind.PATCHIFY and self.stride == 1:
            return (2, 2, 0)
        return None

    @property
    def factor(self):
        """Spatial downsampling performed by the stem itself."""
        if self.kind == StemKind.RESNET:
            return 4
        if self.kind == StemKind.POSTPONED:
            return 2
        if self.kind == StemKind.PATCHIFY:
            return self.stride if self.stride >= PATCHIFY_FULL_STRIDE else 2
        return 1

    @property
    def first_stage_stride(self):
        # Deferred downsampling moves into the first block of stage 1
        if self.kind == StemKind.POSTPONED:
            return 2
        if self.kind == StemKind.PATCHIFY and self.stride < PATCHIFY_FULL_STRIDE:
            return 2
        return 1


@dataclasses.dataclass(frozen=True)
class BlockSpec:
    kind: BlockKind
    expansion: int
    act_mask: tuple
    norm_mask: tuple
    se_ratio: int = None
    base_width: int = DEFAULT_BASE_WIDTH

    @classmethod
    def basic(cls, se_ratio=None):
        return cls(BlockKind.BASIC, 1, (True, True), (True, True), se_ratio)

    @classmethod
    def bottleneck(cls, expansion=4, base_width=DEFAULT_BASE_WIDTH, se_ratio=None):
        return cls(BlockKind.BOTTLENECK, expansion, (True, True, True), (True, True, True),
                   se_ratio, base_width)

    def inner_width(self, width):
        if self.kind == BlockKind.BASIC:
            return width
        return max(1, width * self.base_width // DEFAULT_BASE_WIDTH)

    def out_width(self, width):
        return width * self.expansion


@dataclasses.dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    stem: StemSpec
    stages: tuple
    block: BlockSpec
    activation: ActivationKind
    num_classes: int

    @property
    def depths(self):
        return [s.depth for s in self.stages]

    @property
    def widths(self):
        return [s.width for s in self.stages]

    def with_stages(self, depths, widths):
        stages = tuple(StageSpec(d, w) for d, w in zip(depths, widths))
        return dataclasses.replace(self, stages=stages)


@dataclasses.dataclass(frozen=True)
class WdRange:
    lo: float = 7.5
    hi: float = 13.5

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise RangeError(f"Invalid WD range [{self.lo}, {self.hi}]")

    @classmethod
    def default(cls):
        return cls(7.5, 13.5)

    def contains(self, value):
        return self.lo <= value <= self.hi


@dataclasses.dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self):
        return f"{self.field}: {self.rule}"




def _structural_violations(spec):

    violations = []

    if not Check.is_spec_name(spec.name):
        violations.append(Violation("name", "nonempty single-line text without '#' or ','"))

    stem = spec.stem
    if not isinstance(stem.kind, StemKind):
        violations.append(Violation("stem.kind", "one of " + ", ".join(k.value for k in StemKind)))
    if not Check.is_positive_int(stem.out_width) or stem.out_width > STEM_MAX_WIDTH:
        violations.append(Violation("stem.out_width", f"1 <= out_width <= {STEM_MAX_WIDTH}"))
    if stem.kind == StemKind.PATCHIFY:
        if not Check.is_positive_int(stem.patch):
            violations.append(Violation("stem.patch", "patch >= 1"))
        elif not Check.is_positive_int(stem.stride) or stem.stride > stem.patch:
            violations.append(Violation("stem.stride", "1 <= stride <= patch"))
    elif stem.patch is not None or stem.stride is not None:
        violations.append(Violation("stem.patch", "patch and stride only apply to Patchify"))

    if len(spec.stages) < 1:
        violations.append(Violation("stages", "len(stages) >= 1"))
    for i, stage in enumerate(spec.stages):
        if not Check.is_positive_int(stage.depth):
            violations.append(Violation(f"stages[{i}].depth", "depth >= 1"))
        if not Check.is_positive_int(stage.width):
            violations.append(Violation(f"stages[{i}].width", "width >= 1"))

    block = spec.block
    if not isinstance(block.kind, BlockKind):
        violations.append(Violation("block.kind", "one of " + ", ".join(k.value for k in BlockKind)))
        return violations
    if not Check.is_positive_int(block.expansion):
        violations.append(Violation("block.expansion", "expansion >= 1"))
    elif block.kind == BlockKind.BASIC and block.expansion != 1:
        violations.append(Violation("block.expansion", "expansion = 1 for Basic"))
    if not Check.is_positive_int(block.base_width):
        violations.append(Violation("block.base_width", "base_width >= 1"))
    elif block.kind == BlockKind.BASIC and block.base_width != DEFAULT_BASE_WIDTH:
        violations.append(Violation("block.base_width", f"base_width = {DEFAULT_BASE_WIDTH} for Basic"))
    if block.se_ratio is not None and not Check.is_positive_int(block.se_ratio):
        violations.append(Violation("block.se_ratio", "se_ratio >= 1 when present"))
    for field in ("act_mask", "norm_mask"):
        mask = getattr(block, field)
        if len(mask) != block.kind.conv_count:
            violations.append(Violation(f"block.{field}", f"length = {block.kind.conv_count} for {block.kind.value}"))
        elif not all(isinstance(flag, bool) for flag in mask):
            violations.append(Violation(f"block.{field}", "boolean flags"))

    if not isinstance(spec.activation, ActivationKind):
        violations.append(Violation("activation.kind", "one of " + ", ".join(k.value for k in ActivationKind)))

    if not Check.is_positive_int(spec.num_classes):
        violations.append(Violation("head.num_classes", "num_classes >= 1"))

    return violations


def validate(spec):
    """Every violated invariant of spec, as (field, rule) pairs."""

    violations = _structural_violations(spec)

    if len(spec.stages) < 2:
        violations.append(Violation("stages", "len(stages) >= 2"))

    return violations


def ensure_valid(spec, structural=False):
    """Raise SpecValidationError unless spec is valid.

    structural only checks what is needed to realize the spec, so single
    stage toy specs pass.
    """

    violations = _structural_violations(spec) if structural else validate(spec)
    if violations:
        raise SpecValidationError(violations)




def wd_ratio(spec):

    if len(spec.stages) < 2:
        raise SpecError(f"WD ratio needs at least 2 stages, {spec.name} has {len(spec.stages)}")

    ensure_valid(spec)

    # The last stage never takes part
    ratios = [s.width / s.depth for s in spec.stages[:-1]]

    return sum(ratios) / len(ratios)


def in_optimal_range(spec, wd_range=None):

    if wd_range is None:
        wd_range = WdRange.default()

    return wd_range.contains(wd_ratio(spec))


def downsampling_factor(spec):
    return spec.stem.factor * spec.stem.first_stage_stride * 2 ** (len(spec.stages) - 1)




def _se_params(channels, ratio):
    hidden = math.ceil(channels / ratio)
    return 2 * channels * hidden + hidden + channels


def _conv_params(cin, cout, kernel, normalized):
    # Bias only where no normalization follows
    count = kernel * kernel * cin * cout
    if normalized:
        count += 2 * cout
    else:
        count += cout
    return count


def _block_params(spec, cin, width, stride):

    block = spec.block
    act = spec.activation.param_count
    inner = block.inner_width(width)
    cout = block.out_width(width)

    if block.kind == BlockKind.BASIC:
        count = _conv_params(cin, inner, 3, block.norm_mask[0])
        count += _conv_params(inner, cout, 3, block.norm_mask[1])
        se_channels = cout
    else:
        count = _conv_params(cin, inner, 1, block.norm_mask[0])
        count += _conv_params(inner, inner, 3, block.norm_mask[1])
        count += _conv_params(inner, cout, 1, block.norm_mask[2])
        se_channels = inner

    if block.se_ratio is not None:
        count += _se_params(se_channels, block.se_ratio)

    count += act * sum(block.act_mask)

    if cin != cout or stride != 1:
        count += _conv_params(cin, cout, 1, True)

    return count, cout


def count_params(spec, input_channels=3):
    """Exact number of trainable scalars of the realized network."""

    ensure_valid(spec, structural=True)

    stem = spec.stem
    total = _conv_params(input_channels, stem.out_width, stem.kernel, True)
    total += spec.activation.param_count

    channels = stem.out_width
    for i, stage in enumerate(spec.stages):
        for j in range(stage.depth):
            if j == 0:
                stride = stem.first_stage_stride if i == 0 else 2
            else:
                stride = 1
            count, channels = _block_params(spec, channels, stage.width, stride)
            total += count

    total += channels * spec.num_classes + spec.num_classes

    return total




def robustify_step(spec, principle, stages=None):
    """Apply one principle of the robustness roadmap and return a new spec.

    For DepthWidth, stages is an optional list of (depth, width) pairs.
    Without it the stage table is taken from the registry entry matching the
    spec name.
    """

    ensure_valid(spec)

    if principle == RobustifyPrinciple.DEPTH_WIDTH:
        return _depth_width(spec, stages)

    if principle == RobustifyPrinciple.CONV_STEM:
        kind = StemKind.CIFAR if spec.stem.kind == StemKind.CIFAR else StemKind.POSTPONED
        return dataclasses.replace(spec, stem=StemSpec(kind, ROBUST_STEM_WIDTH))

    if principle == RobustifyPrinciple.SQUEEZE_EXCITE:
        block = dataclasses.replace(spec.block, se_ratio=ROBUST_SE_RATIO)
        return dataclasses.replace(spec, block=block)

    if principle == RobustifyPrinciple.SMOOTH_ACT:
        return dataclasses.replace(spec, activation=ActivationKind.SILU)

    raise SpecError(f"Unknown robustify principle {principle}")


def _depth_width(spec, stages):

    if stages is not None:
        depths = [d for d, _ in stages]
        widths = [w for _, w in stages]
        result = spec.with_stages(depths, widths)
        ensure_valid(result)
        if not in_optimal_range(result):
            raise SpecError(f"Stage table has WD ratio {wd_ratio(result):.2f}, outside the optimal range")
        return result

    target = ROBUSTIFIED.get(spec.name)
    if target is None:
        logger.error(f"No stage table registered for {spec.name}")
        raise NeedsExplicitStages(f"No stage table registered for '{spec.name}', supply the stages")

    row = lookup(target)
    block = dataclasses.replace(spec.block, expansion=row.block.expansion, base_width=row.block.base_width)

    return dataclasses.replace(spec, name=row.name, stages=row.stages, block=block)


def robustify_all(spec):
    for principle in ROADMAP:
        spec = robustify_step(spec, principle)
    return spec


def roadmap(spec):
    """The cumulative roadmap: one (label, spec) pair per step, baseline first."""

    steps = [("baseline", spec)]
    for principle in ROADMAP:
        spec = robustify_step(spec, principle)
        steps.append((principle.value, spec))

    return steps




def _imagenet_baseline(name, depths, base_width=DEFAULT_BASE_WIDTH):
    spec = ArchitectureSpec(name, StemSpec(StemKind.RESNET, 64), (),
                            BlockSpec.bottleneck(4, base_width), ActivationKind.RELU, 1000)
    return spec.with_stages(depths, [64, 128, 256, 512])


def _wrn_baseline(depth, k):
    blocks = (depth - 4) // 6
    spec = ArchitectureSpec(f"WRN-{depth}-{k}", StemSpec(StemKind.CIFAR, 16), (),
                            BlockSpec.basic(), ActivationKind.RELU, 10)
    return spec.with_stages([blocks] * 3, [16 * k, 32 * k, 64 * k])


def _robust_row(name, depths, widths, imagenet):

    if imagenet:
        stem = StemSpec(StemKind.POSTPONED, ROBUST_STEM_WIDTH)
        block = BlockSpec.bottleneck(8, 112, ROBUST_SE_RATIO)
        classes = 1000
    else:
        stem = StemSpec(StemKind.CIFAR, ROBUST_STEM_WIDTH)
        block = BlockSpec.basic(ROBUST_SE_RATIO)
        classes = 10

    spec = ArchitectureSpec(name, stem, (), block, ActivationKind.SILU, classes)
    return spec.with_stages(depths, widths)


BASELINES = {
    spec.name: spec for spec in (
        _imagenet_baseline("ResNet-50", [3, 4, 6, 3]),
        _imagenet_baseline("ResNet-101", [3, 4, 23, 3]),
        _imagenet_baseline("WRN-101-2", [3, 4, 23, 3], base_width=128),
        _wrn_baseline(22, 10),
        _wrn_baseline(28, 10),
        _wrn_baseline(34, 12),
        _wrn_baseline(70, 16),
    )
}

# Robustified architectures, in the order they are usually reported
TABLE = {
    spec.name: spec for spec in (
        _robust_row("RaResNet-50", [5, 8, 13, 1], [36, 72, 140, 270], True),
        _robust_row("RaWRN-22-10", [13, 15, 2], [120, 240, 480], False),
        _robust_row("RaWRN-28-10", [14, 16, 3], [128, 256, 512], False),
        _robust_row("RaResNet-101", [7, 11, 18, 1], [42, 84, 166, 328], True),
        _robust_row("RaWRN-34-12", [18, 20, 5], [144, 288, 576], False),
        _robust_row("RaWRN-101-2", [7, 11, 18, 1], [64, 128, 252, 504], True),
        _robust_row("RaWRN-70-16", [30, 31, 10], [216, 432, 864], False),
    )
}

ROBUSTIFIED = {name: "Ra" + name for name in BASELINES}
ROBUSTIFIED.update({name: name for name in TABLE})


def lookup(name):

    if name in TABLE:
        return TABLE[name]
    if name in BASELINES:
        return BASELINES[name]

    raise SpecError(f"Unknown architecture '{name}'")


def registry_names():
    return list(BASELINES) + list(TABLE)




def _named(spec, label, **changes):
    return dataclasses.replace(spec, name=f"{spec.name}-{label}", **changes)


def _mask_label(mask, activation):
    return "-".join(activation.value if flag else "0" for flag in mask)


def component_variants(spec):
    """Single-component edits of spec covering the stem, SE and activation
    ablations.
    """

    ensure_valid(spec)

    width = spec.stem.out_width
    block = spec.block
    variants = []

    variants.append(("postponed-downsampling", _named(spec, "postponed", stem=StemSpec(StemKind.POSTPONED, width))))
    for patch, stride in ((4, 4), (2, 2), (4, 3), (4, 2), (4, 1)):
        stem = StemSpec.patchify(patch, stride, width)
        variants.append((f"patch{patch}-stride{stride}", _named(spec, f"p{patch}s{stride}", stem=stem)))
    for stem_width in (32, 96):
        stem = dataclasses.replace(spec.stem, out_width=stem_width)
        variants.append((f"stem-width-{stem_width}", _named(spec, f"stem{stem_width}", stem=stem)))

    variants.append(("se-r4", _named(spec, "se4", block=dataclasses.replace(block, se_ratio=ROBUST_SE_RATIO))))

    convs = block.kind.conv_count
    for bits in range(2 ** convs - 2, 0, -1):
        mask = tuple(bool(bits >> (convs - 1 - i) & 1) for i in range(convs))
        label = _mask_label(mask, spec.activation)
        variants.append((label, _named(spec, f"act{''.join('1' if f else '0' for f in mask)}",
                                       block=dataclasses.replace(block, act_mask=mask))))

    for i in range(convs):
        mask = tuple(j != i for j in range(convs))
        label = "norm-" + "-".join("1" if f else "0" for f in mask)
        variants.append((label, _named(spec, f"norm{''.join('1' if f else '0' for f in mask)}",
                                       block=dataclasses.replace(block, norm_mask=mask))))

    for kind in ActivationKind:
        if kind != spec.activation:
            variants.append((kind.value, _named(spec, kind.value, activation=kind)))

    return variants


def se_ratio_sweep(spec, ratios=(2, 4, 8, 16, 32, 64)):

    ensure_valid(spec)

    return [_named(spec, f"se{r}", block=dataclasses.replace(spec.block, se_ratio=r)) for r in ratios]
