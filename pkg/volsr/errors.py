#!/usr/bin/env python3
"""
Volsr Error Hierarchy
=====================

Exception types shared by every volsr module. Each error carries a short
machine code and the process exit code the CLI reports for it.

Exit codes:
    2 - usage / configuration / contract violations
    3 - container or file format errors
    4 - numeric failures (NaN / Inf)
    5 - manifest or checkpoint mismatches

Version: 1.0.0
"""

from typing import Optional


class VolsrError(Exception):
    """Base exception for volsr errors"""

    code = "error"
    exit_code = 1


class ContractViolationError(VolsrError):
    """Exception for violated preconditions (bad arguments, shapes)"""

    code = "contract"
    exit_code = 2


class ShapeError(ContractViolationError):
    """Exception for tensor or grid shape mismatches"""

    code = "shape"


class ConfigError(VolsrError):
    """Exception for invalid configuration values or missing inputs"""

    code = "config"
    exit_code = 2


class FormatError(VolsrError):
    """Base exception for container / file format errors"""

    code = "format"
    exit_code = 3


class MagicMismatchError(FormatError):
    """File does not start with the expected magic bytes"""

    code = "format-magic"


class UnsupportedVersionError(FormatError):
    """Container version is newer than this reader understands"""

    code = "format-version"


class TruncatedPayloadError(FormatError):
    """Payload is shorter than the header declares"""

    code = "format-truncated"


class PayloadLengthError(FormatError):
    """Payload length disagrees with the declared dims"""

    code = "format-length"


class NumericError(VolsrError):
    """Exception for non-finite values"""

    code = "numeric"
    exit_code = 4


class NonFiniteLossError(NumericError):
    """Training loss became NaN or Inf"""

    code = "numeric-loss"

    def __init__(self, message: str, epoch: Optional[int] = None, batch_index: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch_index = batch_index


class ManifestMismatchError(VolsrError):
    """Dataset manifest does not match the requested spec / stats"""

    code = "manifest"
    exit_code = 5


class CheckpointMismatchError(ManifestMismatchError):
    """Checkpoint kind or config does not match what the caller expects"""

    code = "checkpoint"


class EmptyAccumulatorError(ContractViolationError):
    """finalize() called before any patch was placed"""

    code = "stitch-empty"


class PlacementError(ContractViolationError):
    """Patch placement falls outside the target grid"""

    code = "stitch-bounds"


class CoverageError(ContractViolationError):
    """Stitched grid has uncovered voxels and the fill policy forbids filling them"""

    code = "stitch-coverage"


__all__ = [
    'VolsrError',
    'ContractViolationError',
    'ShapeError',
    'ConfigError',
    'FormatError',
    'MagicMismatchError',
    'UnsupportedVersionError',
    'TruncatedPayloadError',
    'PayloadLengthError',
    'NumericError',
    'NonFiniteLossError',
    'ManifestMismatchError',
    'CheckpointMismatchError',
    'EmptyAccumulatorError',
    'PlacementError',
    'CoverageError',
]
