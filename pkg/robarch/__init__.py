#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

# FIXME Specify version here and pick it up with setuptools
# See https://github.com/pypa/setuptools/pull/1753
#__version__ = "0.1.dev0"

from .archspec import *
from .specfile import *
from .designspace import *
from .tensor import *
from .snapshot import *
from .netbuild import *
from .adversarial import *
from .data import *
from .cli import run_command
from .cli import main
from .common import *
from .logger import *
