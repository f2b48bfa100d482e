#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module logger

Centralized logging for the robarch modules.

run_command sets up the root logger with setup_root_logger, at WARNING level
unless -v is given, and on stderr unless --log-file is given. Calling it
again replaces the handler it installed before.

Modules call get_logger(__name__) and use the plain logging API on it.
"""




import logging


_handler = None


def setup_root_logger(filename=None, level=logging.INFO):

    global _handler

    # Setup root logger
    logger = logging.getLogger()
    logger.setLevel(level)

    if _handler is not None:
        logger.removeHandler(_handler)
        _handler.close()

    if filename is None:
        handler = logging.StreamHandler()
    else:
        handler = logging.FileHandler(filename)

    formatter = logging.Formatter('[{asctime} - {levelname:>8}] {name:>15} {funcName:>20}() - {message}', style='{')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    _handler = handler




def get_logger(name):
    return logging.getLogger(name)
