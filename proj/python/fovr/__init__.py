# Copyright 2026 The fovr Authors.
# SPDX-License-Identifier: Apache-2.0
"""Foveated interleaved decoding on a synthetic glyph environment."""

from fovr._core import *  # noqa: F401,F403
from fovr._core import __doc__, version  # noqa: F401

__version__ = version().split()[1]
