# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the tivgan C++ library."""

from ._tivgan import (
    Checkpoint,
    Error,
    encode_caption,
    fid,
    inception_score,
    run_cli,
    synthetic_dataset,
)

__all__ = [
    "Checkpoint",
    "Error",
    "encode_caption",
    "fid",
    "inception_score",
    "run_cli",
    "synthetic_dataset",
]
