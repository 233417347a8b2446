"""Correct multi-view local affine frames so they satisfy epipolar geometry."""

from ._core import *  # noqa: F401,F403
