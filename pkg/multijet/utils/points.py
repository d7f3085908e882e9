"""
Point-list parsing for the command line.

Two textual forms are accepted:

* ``"0,0,1"`` for n=1, one coordinate per point;
* ``"(0,0);(0,1)"`` for n>=1, one parenthesised tuple per point.
"""

import re

import numpy as np

from ..exceptions import DimensionMismatchError, ValidationError

_TUPLE = re.compile(r"\(([^()]*)\)")


def _number(token: str) -> float:
    token = token.strip()
    try:
        return float(token)
    except ValueError as e:
        raise ValidationError(f"Not a number: '{token}'", field="points") from e


def parse_points(text: str, n: int | None = None) -> np.ndarray:
    """
    Parse a point list into a (p, n) array.

    Args:
        text: Point list in one of the two accepted forms
        n: Expected ambient dimension (inferred when None)

    Returns:
        Array of shape (p, n)

    Raises:
        ValidationError: On malformed input
        DimensionMismatchError: When a tuple has the wrong length
    """
    text = text.strip()
    if not text:
        raise ValidationError("Empty point list", field="points")

    if "(" in text:
        tuples = _TUPLE.findall(text)
        if not tuples or _TUPLE.sub("", text).replace(";", "").strip():
            raise ValidationError(f"Malformed point list: '{text}'", field="points")
        rows = [[_number(t) for t in body.split(",")] for body in tuples]
    else:
        rows = [[_number(t)] for t in text.split(",")]

    dim = n if n is not None else len(rows[0])
    for row in rows:
        if len(row) != dim:
            raise DimensionMismatchError(dim, len(row), field="points")
    return np.asarray(rows, dtype=float)


def parse_floats(text: str) -> list[float]:
    """Parse a comma-separated list of numbers."""
    return [_number(t) for t in text.split(",") if t.strip()]
