"""Realistic-value projection and editability enforcement for candidates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .schema import Schema, editability_vector


@dataclass(frozen=True)
class ProjectionReport:
    corrected: np.ndarray
    n_corrections: int


def _check_width(x: np.ndarray, m: int) -> None:
    if x.shape[-1] != m:
        raise ValueError(f"expected vectors of length {m}, got {x.shape[-1]}")


def project_rows(X: np.ndarray, schema: Schema) -> tuple[np.ndarray, np.ndarray]:
    """Batch form of :func:`project_realistic` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_width(X, schema.m)
    starts, sizes = schema.group_bounds
    return kernels.project_rows(X, schema.kind_codes, starts, sizes)


def project_realistic(x: np.ndarray, schema: Schema) -> ProjectionReport:
    """Snap every component onto its type's domain.

    Booleans threshold at 0.5, integers round, positive types clip at 0 and a
    one-hot group keeps only its largest member (lowest index on ties).
    """
    out, changed = project_rows(np.asarray(x, dtype=np.float64)[None, :], schema)
    return ProjectionReport(out[0], int(changed[0]))


def enforce_editability(candidate: np.ndarray, original: np.ndarray, e: np.ndarray) -> np.ndarray:
    candidate = np.asarray(candidate, dtype=np.float64)
    original = np.asarray(original, dtype=np.float64)
    e = np.asarray(e, dtype=bool)
    if candidate.shape[-1] != original.shape[-1] or e.shape[-1] != original.shape[-1]:
        raise ValueError("candidate, original and editability vector differ in length")
    return np.where(e, candidate, original)


def sanitize_rows(X: np.ndarray, original: np.ndarray, schema: Schema,
                  editability: bool = True, realistic: bool = True,
                  e: np.ndarray | None = None) -> np.ndarray:
    """Editability first, then projection; either step can be switched off."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_width(X, schema.m)
    if editability:
        X = enforce_editability(X, original, editability_vector(schema) if e is None else e)
    if realistic:
        X, _ = project_rows(X, schema)
    return X


def sanitize(candidate: np.ndarray, original: np.ndarray, schema: Schema) -> np.ndarray:
    candidate = np.asarray(candidate, dtype=np.float64)
    if candidate.shape != (schema.m,) or np.shape(original) != (schema.m,):
        raise ValueError(f"expected vectors of length {schema.m}")
    return sanitize_rows(candidate, original, schema)[0]


def count_unrealistic_rows(X: np.ndarray, schema: Schema) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_width(X, schema.m)
    starts, sizes = schema.group_bounds
    return kernels.count_violations_rows(X, schema.kind_codes, starts, sizes)


def count_unrealistic(x: np.ndarray, schema: Schema) -> int:
    return int(count_unrealistic_rows(np.asarray(x, dtype=np.float64)[None, :], schema)[0])
