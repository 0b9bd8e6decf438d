"""Input coercion shared by the estimator and the CLI."""
from __future__ import annotations

import os

import numpy as np

from . import opb
from .model import Problem


def check_problem(X) -> Problem:
    """Accept a :class:`Problem`, OPB text/bytes, or a path to an OPB file."""
    if isinstance(X, Problem):
        return X
    if isinstance(X, (bytes, bytearray)):
        return opb.parse(bytes(X))
    if isinstance(X, os.PathLike):
        return opb.read(X)
    if isinstance(X, str):
        if "\n" not in X and os.path.exists(X):
            return opb.read(X)
        return opb.parse(X)
    raise TypeError(f"expected a Problem, OPB text or a path, got {type(X).__name__}")


def check_solution(x, n_vars=None) -> dict:
    """Coerce a 0/1 vector or ``{var: value}`` mapping into a dict of ints."""
    if isinstance(x, dict):
        out = {int(k): int(v) for k, v in x.items()}
    else:
        arr = np.asarray(x)
        if arr.ndim != 1:
            raise ValueError(f"solution must be one-dimensional, got shape {arr.shape}")
        if n_vars is not None and arr.shape[0] != n_vars:
            raise ValueError(f"solution has {arr.shape[0]} entries, expected {n_vars}")
        out = {i: int(v) for i, v in enumerate(arr.tolist())}
    bad = [k for k, v in out.items() if v not in (0, 1)]
    if bad:
        raise ValueError(f"non-binary values for variables {bad[:5]}")
    if n_vars is not None:
        out_of_range = [k for k in out if not 0 <= k < n_vars]
        if out_of_range:
            raise ValueError(f"variable indices out of range: {out_of_range[:5]}")
    return out
