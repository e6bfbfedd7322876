"""Common model components and validation helpers."""

import math
from typing import Iterable, Sequence, Tuple

#: Number of per-VM controllers (VMM CPU, app CPU, I/O rate, cost rate, job count).
FEATURE_DIM = 5

#: Canonical parameter count of the two-VM quadratic model.
N_COEFFICIENTS = 66


def ensure_finite(values: Iterable[float], *, name: str) -> Tuple[float, ...]:
    """Return ``values`` as a float tuple, rejecting NaN and infinities."""
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
    return out


def ensure_non_negative(values: Iterable[float], *, name: str) -> Tuple[float, ...]:
    """Return ``values`` as a finite float tuple, rejecting negative entries."""
    out = ensure_finite(values, name=name)
    for v in out:
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v!r}")
    return out


def ensure_shape(rows: Sequence[Sequence[float]], shape: Tuple[int, int], *, name: str) -> Tuple[Tuple[float, ...], ...]:
    """Validate a nested sequence against a 2-D shape and return it as tuples."""
    n_rows, n_cols = shape
    if len(rows) != n_rows:
        raise ValueError(f"{name} must have {n_rows} rows, got {len(rows)}")
    out = []
    for row in rows:
        if len(row) != n_cols:
            raise ValueError(f"{name} rows must have {n_cols} entries, got {len(row)}")
        out.append(ensure_finite(row, name=name))
    return tuple(out)
