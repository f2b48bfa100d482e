#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module common

Entities used by more than a single module that cannot be fit cleanly into the
current import structure: the parameter checks used at every boundary and the
exception hierarchy raised by the workbench.
"""




import math
import numbers
import os
import stat




class Check:

    """
    Functions to check validity of parameters

    Intended to be used for:
    - Boundaries (e.g. CLI inputs, spec files, dataset files...)
    - Value object construction (attack and training configurations...)
    - etc
    """


    @classmethod
    def is_natural(cls, number):

        if number is None:
            return False

        if isinstance(number, bool) or not isinstance(number, numbers.Integral):
            return False

        if number < 0:
            return False

        return True


    @classmethod
    def is_positive_int(cls, number):

        if not Check.is_natural(number):
            return False

        return number >= 1


    @classmethod
    def is_finite_real(cls, number):

        if number is None:
            return False

        if isinstance(number, bool) or not isinstance(number, numbers.Real):
            return False

        return math.isfinite(number)


    @classmethod
    def is_probability(cls, number):

        if not Check.is_finite_real(number):
            return False

        return 0.0 <= number <= 1.0


    @classmethod
    def is_spec_name(cls, name):

        if not isinstance(name, str):
            return False

        if name != name.strip() or name == "":
            return False

        if "#" in name or "," in name:
            return False

        # Any line boundary the spec reader splits on
        if name.splitlines() != [name]:
            return False

        return True


    @classmethod
    def is_valid_file(cls, path):

        if path is None:
            return False

        # Check if path is a symlink
        if os.path.islink(path):
            return False

        try:
            mode = os.stat(path).st_mode
        except FileNotFoundError:
            return False

        # Check if the path does not point to a regular file
        if not stat.S_ISREG(mode):
            return False

        return True




def format_real(value):
    """Bit-stable textual form of a real used in every CSV artifact."""
    return format(float(value), ".10g")


def ensure_input_file(path):
    """Input files must be regular files, symlinks are refused."""

    if not Check.is_valid_file(path):
        raise FormatError(f"{path} is not a regular file")




class RobarchError(Exception):
    pass


class SpecError(RobarchError, ValueError):
    pass


class SpecSyntaxError(SpecError):

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownKey(SpecSyntaxError):

    def __init__(self, line, key):
        self.key = key
        super().__init__(line, f"unknown key '{key}'")


class MissingField(SpecError):

    def __init__(self, field):
        self.field = field
        super().__init__(f"missing required field '{field}'")


class SpecValidationError(SpecError):

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid spec: {text}")


class NeedsExplicitStages(SpecError):
    pass


class BudgetInfeasible(RobarchError, RuntimeError):
    pass


class RangeError(RobarchError, ValueError):
    pass


class DegenerateInput(RobarchError, ArithmeticError):
    pass


class ShapeError(RobarchError, ValueError):
    pass


class ParamError(RobarchError, ValueError):
    pass


class Unsupported(RobarchError, RuntimeError):
    pass


class DivergenceError(RobarchError, ArithmeticError):

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        if message is None:
            message = f"non-finite loss in epoch {epoch}"
        super().__init__(message)


class FormatError(RobarchError, ValueError):
    pass


class ConfigError(RobarchError, ValueError):
    pass
