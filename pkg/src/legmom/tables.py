"""Triangular moment tables and their plain-text serialisation.

The file format is line-oriented for diff-ability: a header
``# legendre-moments v1 <Nx> <Ny> <M> <method>`` followed by one
``p q value`` record per moment, values printed with 17 significant digits
so a read-back is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FORMAT_NAME = "legendre-moments"
FORMAT_VERSION = "v1"


class MomentFormatError(ValueError):
    """Malformed moment file; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


def triangle_pairs(order: int):
    """(p, q) index pairs with p + q <= order, lexicographic."""
    return [(p, q) for p in range(order + 1) for q in range(order + 1 - p)]


@dataclass(eq=False)
class MomentTable:
    """Moments L[p, q] for p + q <= order of an nx-by-ny image.

    ``values`` is a dense (order+1, order+1) float array, zero outside the
    triangle. p pairs with the x axis (width nx), q with the y axis.
    """

    order: int
    nx: int
    ny: int
    values: np.ndarray
    method: str = "fast"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.order + 1, self.order + 1):
            raise ValueError(f"values shape {vals.shape} does not match order "
                             f"{self.order}")
        ps, qs = np.meshgrid(np.arange(self.order + 1), np.arange(self.order + 1),
                             indexing="ij")
        inside = ps + qs <= self.order
        if not np.all(np.isfinite(vals[inside])):
            raise ValueError("non-finite moment value")
        vals = vals.copy()
        vals[~inside] = 0.0
        self.values = vals

    @property
    def num_records(self) -> int:
        return (self.order + 1) * (self.order + 2) // 2

    def value(self, p: int, q: int) -> float:
        if p < 0 or q < 0 or p + q > self.order:
            raise IndexError(f"(p, q) = ({p}, {q}) outside triangle of order "
                             f"{self.order}")
        return float(self.values[p, q])

    def items(self):
        for p, q in triangle_pairs(self.order):
            yield p, q, float(self.values[p, q])

    def equals(self, other: "MomentTable") -> bool:
        return (self.order == other.order and self.nx == other.nx
                and self.ny == other.ny
                and np.array_equal(self.values, other.values))

    def max_relative_difference(self, other: "MomentTable",
                                floor: float = 1.0) -> float:
        """Largest |self - other| / max(|other|, floor) over the triangle."""
        if self.order != other.order:
            raise ValueError("orders differ")
        diff = 0.0
        for p, q in triangle_pairs(self.order):
            denom = max(abs(other.values[p, q]), floor)
            diff = max(diff, abs(self.values[p, q] - other.values[p, q]) / denom)
        return diff


def write_moments(table: MomentTable) -> bytes:
    """Serialise a complete table; see read_moments for the inverse."""
    lines = [f"# {FORMAT_NAME} {FORMAT_VERSION} {table.nx} {table.ny} "
             f"{table.order} {table.method}"]
    for p, q, v in table.items():
        lines.append(f"{p} {q} {v:.17g}")
    return ("\n".join(lines) + "\n").encode("ascii")


def read_moments(data: bytes) -> MomentTable:
    """Parse and validate a moment file: version, completeness, uniqueness
    and finiteness are all enforced."""
    text = data.decode("ascii", errors="replace")
    lines = text.splitlines()
    if not lines:
        raise MomentFormatError("empty moment file")
    head = lines[0].split()
    if len(head) != 7 or head[0] != "#" or head[1] != FORMAT_NAME:
        raise MomentFormatError("missing moment-file header", line=1)
    if head[2] != FORMAT_VERSION:
        raise MomentFormatError(
            f"version mismatch: got {head[2]}, expected {FORMAT_VERSION}", line=1)
    try:
        nx, ny, order = int(head[3]), int(head[4]), int(head[5])
    except ValueError:
        raise MomentFormatError("unparseable header fields", line=1) from None
    method = head[6]
    if order < 0 or nx < 2 or ny < 2:
        raise MomentFormatError(f"invalid header geometry {nx}x{ny} order {order}",
                                line=1)
    values = np.zeros((order + 1, order + 1))
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise MomentFormatError(f"expected 'p q value', got {line!r}",
                                    line=lineno)
        try:
            p, q = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise MomentFormatError(f"unparseable record {line!r}",
                                    line=lineno) from None
        if p < 0 or q < 0 or p + q > order:
            raise MomentFormatError(f"(p, q) = ({p}, {q}) outside triangle",
                                    line=lineno)
        if (p, q) in seen:
            raise MomentFormatError(f"duplicate record for ({p}, {q})", line=lineno)
        if not np.isfinite(v):
            raise MomentFormatError(f"non-finite value for ({p}, {q})", line=lineno)
        seen.add((p, q))
        values[p, q] = v
    expected = (order + 1) * (order + 2) // 2
    if len(seen) != expected:
        missing = [pq for pq in triangle_pairs(order) if pq not in seen]
        raise MomentFormatError(
            f"incomplete table: {len(seen)} of {expected} records, "
            f"first missing {missing[0]}")
    return MomentTable(order=order, nx=nx, ny=ny, values=values, method=method)


def save_moments(table: MomentTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_moments(table))


def load_moments(path) -> MomentTable:
    with open(path, "rb") as fh:
        return read_moments(fh.read())
