#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module specfile

Text format for ArchitectureSpec.

A spec file is a UTF-8 sequence of sections. Each section starts with a
header line "[name]" and holds "key = value" lines. Blank lines and text
after '#' are ignored. Lists are comma separated, masks are lists of 0/1 and
an absent SE ratio is written "none".

    [stem]
    kind = PostponedDownsampling
    out_width = 96

    [stages]
    depths = 5, 8, 13, 1
    widths = 36, 72, 140, 270

    [block]
    kind = Bottleneck
    expansion = 8
    base_width = 112
    se_ratio = 4
    act_mask = 1, 1, 1
    norm_mask = 1, 1, 1

    [activation]
    kind = SiLU

    [head]
    name = RaResNet-50
    num_classes = 1000

Patchify stems add "patch" and "stride" keys after "out_width". emit_spec
always writes this canonical layout, so emitted files can be compared byte by
byte.
"""




from .archspec import ActivationKind
from .archspec import ArchitectureSpec
from .archspec import BlockKind
from .archspec import BlockSpec
from .archspec import DEFAULT_BASE_WIDTH
from .archspec import StageSpec
from .archspec import StemKind
from .archspec import StemSpec
from .archspec import ensure_valid
from .common import MissingField
from .common import SpecSyntaxError
from .common import ensure_input_file
from .common import UnknownKey

from .logger import get_logger


logger = get_logger(__name__)


SECTIONS = {
    "stem": ("kind", "out_width", "patch", "stride"),
    "stages": ("depths", "widths"),
    "block": ("kind", "expansion", "base_width", "se_ratio", "act_mask", "norm_mask"),
    "activation": ("kind",),
    "head": ("name", "num_classes"),
}




def _mask_text(mask):
    return ", ".join("1" if flag else "0" for flag in mask)


def emit_spec(spec):

    ensure_valid(spec, structural=True)

    lines = ["[stem]", f"kind = {spec.stem.kind.value}", f"out_width = {spec.stem.out_width}"]
    if spec.stem.kind == StemKind.PATCHIFY:
        lines += [f"patch = {spec.stem.patch}", f"stride = {spec.stem.stride}"]

    lines += ["", "[stages]",
              "depths = " + ", ".join(str(d) for d in spec.depths),
              "widths = " + ", ".join(str(w) for w in spec.widths)]

    se = "none" if spec.block.se_ratio is None else str(spec.block.se_ratio)
    lines += ["", "[block]",
              f"kind = {spec.block.kind.value}",
              f"expansion = {spec.block.expansion}",
              f"base_width = {spec.block.base_width}",
              f"se_ratio = {se}",
              f"act_mask = {_mask_text(spec.block.act_mask)}",
              f"norm_mask = {_mask_text(spec.block.norm_mask)}"]

    lines += ["", "[activation]", f"kind = {spec.activation.value}"]

    lines += ["", "[head]", f"name = {spec.name}", f"num_classes = {spec.num_classes}"]

    return "\n".join(lines) + "\n"




def _tokenize(text):
    """Map section -> key -> (value, line number)."""

    sections = {}
    current = None

    for number, raw in enumerate(text.splitlines(), start=1):

        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        if line.startswith("["):
            if not line.endswith("]"):
                raise SpecSyntaxError(number, f"malformed section header '{line}'")
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise SpecSyntaxError(number, f"unknown section '{name}'")
            if name in sections:
                raise SpecSyntaxError(number, f"duplicate section '{name}'")
            sections[name] = {}
            current = name
            continue

        if "=" not in line:
            raise SpecSyntaxError(number, f"expected 'key = value', got '{line}'")

        if current is None:
            raise SpecSyntaxError(number, "key outside of any section")

        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SECTIONS[current]:
            raise UnknownKey(number, f"{current}.{key}")
        if key in sections[current]:
            raise SpecSyntaxError(number, f"duplicate key '{current}.{key}'")

        sections[current][key] = (value, number)

    return sections


class _Reader:

    def __init__(self, sections):
        self.sections = sections


    def section(self, name):
        if name not in self.sections:
            raise MissingField(name)
        return self.sections[name]


    def has(self, section, key):
        return key in self.section(section)


    def text(self, section, key):
        entries = self.section(section)
        if key not in entries:
            raise MissingField(f"{section}.{key}")
        value, number = entries[key]
        if value == "":
            raise SpecSyntaxError(number, f"empty value for '{section}.{key}'")
        return value, number


    def integer(self, section, key):
        value, number = self.text(section, key)
        try:
            return int(value)
        except ValueError:
            raise SpecSyntaxError(number, f"'{section}.{key}' expects an integer, got '{value}'")


    def integers(self, section, key):
        value, number = self.text(section, key)
        try:
            return [int(item) for item in value.split(",")]
        except ValueError:
            raise SpecSyntaxError(number, f"'{section}.{key}' expects a list of integers, got '{value}'")


    def mask(self, section, key):
        value, number = self.text(section, key)
        items = [item.strip() for item in value.split(",")]
        if any(item not in ("0", "1") for item in items):
            raise SpecSyntaxError(number, f"'{section}.{key}' expects a list of 0/1 flags, got '{value}'")
        return tuple(item == "1" for item in items)


    def enum(self, section, key, kind):
        value, number = self.text(section, key)
        if not kind.contains(value):
            choices = ", ".join(k.value for k in kind)
            raise SpecSyntaxError(number, f"'{section}.{key}' must be one of {choices}, got '{value}'")
        return kind(value)




def parse_spec(text):
    """Parse and fully validate a spec file.

    Raises SpecSyntaxError (with line number) on malformed text, MissingField
    when a required section or key is absent and SpecValidationError when
    the resulting spec breaks an invariant.
    """

    reader = _Reader(_tokenize(text))

    for name in SECTIONS:
        reader.section(name)

    stem_kind = reader.enum("stem", "kind", StemKind)
    out_width = reader.integer("stem", "out_width")
    if stem_kind == StemKind.PATCHIFY:
        stem = StemSpec(stem_kind, out_width, reader.integer("stem", "patch"), reader.integer("stem", "stride"))
    else:
        for key in ("patch", "stride"):
            if reader.has("stem", key):
                raise SpecSyntaxError(reader.text("stem", key)[1], f"'stem.{key}' only applies to Patchify")
        stem = StemSpec(stem_kind, out_width)

    depths = reader.integers("stages", "depths")
    widths = reader.integers("stages", "widths")
    if len(depths) != len(widths):
        raise SpecSyntaxError(reader.text("stages", "widths")[1],
                              f"{len(depths)} depths but {len(widths)} widths")
    stages = tuple(StageSpec(d, w) for d, w in zip(depths, widths))

    block_kind = reader.enum("block", "kind", BlockKind)
    default_expansion = 1 if block_kind == BlockKind.BASIC else 4
    expansion = reader.integer("block", "expansion") if reader.has("block", "expansion") else default_expansion
    base_width = reader.integer("block", "base_width") if reader.has("block", "base_width") else DEFAULT_BASE_WIDTH
    se_ratio = None
    if reader.has("block", "se_ratio") and reader.text("block", "se_ratio")[0].lower() != "none":
        se_ratio = reader.integer("block", "se_ratio")
    ones = (True,) * block_kind.conv_count
    act_mask = reader.mask("block", "act_mask") if reader.has("block", "act_mask") else ones
    norm_mask = reader.mask("block", "norm_mask") if reader.has("block", "norm_mask") else ones
    block = BlockSpec(block_kind, expansion, act_mask, norm_mask, se_ratio, base_width)

    activation = reader.enum("activation", "kind", ActivationKind)

    name, _ = reader.text("head", "name")
    num_classes = reader.integer("head", "num_classes")

    spec = ArchitectureSpec(name, stem, stages, block, activation, num_classes)
    ensure_valid(spec)

    logger.debug(f"Parsed spec {spec.name}")

    return spec


def load_spec(path):
    ensure_input_file(path)
    with open(path, encoding="utf-8") as f:
        return parse_spec(f.read())


def save_spec(spec, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(emit_spec(spec))
