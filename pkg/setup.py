#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors

# Metadata and dependencies live in setup.cfg
from setuptools import setup




setup()
