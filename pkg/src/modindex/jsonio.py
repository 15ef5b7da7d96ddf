"""The shared JSON matrix format.

A complex scalar is a ``[re, im]`` pair, a matrix is a row-major list of
rows.  Plain numbers are accepted on input as real scalars; output always
uses pairs so that documents round-trip.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def parse_scalar(x) -> complex:
    if isinstance(x, bool):
        raise DomainError(f"not a scalar: {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise DomainError(f"not a scalar: {x!r}")


def parse_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise DomainError("matrix must be a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError("ragged matrix rows")
    return np.array([[parse_scalar(x) for x in r] for r in rows], dtype=complex)


def dump_scalar(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def dump_matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[dump_scalar(z) for z in row] for row in np.asarray(m)]
