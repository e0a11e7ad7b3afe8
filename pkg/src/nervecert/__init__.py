"""Mapper covers with machine-checkable certificates of nerve-lemma applicability."""

__version__ = "0.1.0"

from .core import Box, InputError, PointCloud, ResourceError, RngSpec  # noqa: F401
