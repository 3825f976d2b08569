"""One-dimensional Legendre moments via the three-term recurrence.

Legendre polynomials obey P_{p+1}(x) = ((2p+1) x P_p(x) - p P_{p-1}(x))/(p+1).
Feeding that into the moment sum turns the power-weighted moments

    W[p][a] = (2p+1)/(N-1) * sum_i x_i^a P_p(x_i) f(x_i)

into the two-row recurrence

    W[p][a] = (2p+1)/p * ( W[p-1][a+1] - (p-1)/(2p-3) * W[p-2][a] )

seeded by W[0][a] = G(a)/(N-1) and W[1][a] = 3 G(a+1)/(N-1), where G is the
geometric moment vector of the signal. Order M needs exactly the triangular
index set {(p, a) : a <= M - p}, and G up to exponent M; the moments proper
are the a = 0 column. Recurrence coefficients are formed fresh from integers
at every step, never accumulated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .folding import (geometric_moments, geometric_moments_binary_runs,
                      geometric_moments_constant)
from .image import BinaryRuns, Constant, classify_signal
from .metering import Meter, model_charge_recurrence

# Orders above this lose relative precision in the x^a weights; results are
# still produced, with a warning.
RECOMMENDED_MAX_ORDER = 40
SUPPORTED_MAX_ORDER = 60


def legendre_grid(n: int) -> np.ndarray:
    """Sampling abscissas x_i = (2i - n - 1)/(n - 1), i = 1..n."""
    if n < 2:
        raise ValueError(f"grid needs n >= 2, got {n}")
    i = np.arange(1, n + 1)
    return (2 * i - n - 1) / (n - 1)


def poly_eval_recurrence(max_order: int, xs) -> np.ndarray:
    """Table V[p, j] = P_p(xs[j]) for p = 0..max_order via the recurrence."""
    if max_order < 0:
        raise ValueError(f"order must be >= 0, got {max_order}")
    xs = np.asarray(xs, dtype=float)
    table = np.empty((max_order + 1, xs.size))
    table[0] = 1.0
    if max_order >= 1:
        table[1] = xs
    for p in range(1, max_order):
        table[p + 1] = ((2 * p + 1) * xs * table[p] - p * table[p - 1]) / (p + 1)
    return table


def poly_coefficients(p: int) -> list[Fraction]:
    """Exact monomial coefficients [c_0, ..., c_p] of P_p.

    c_{p-2k} = (-1)^k (2p-2k)! / (2^p k! (p-k)! (p-2k)!) for k = 0..floor(p/2);
    the parity-skipped slots are zero.
    """
    if p < 0:
        raise ValueError(f"order must be >= 0, got {p}")
    coeffs = [Fraction(0)] * (p + 1)
    for k in range(p // 2 + 1):
        coeffs[p - 2 * k] = Fraction(
            (-1) ** k * math.factorial(2 * p - 2 * k),
            (1 << p) * math.factorial(k) * math.factorial(p - k)
            * math.factorial(p - 2 * k))
    return coeffs


@dataclass
class MomentTriangle:
    """Power-weighted moment rows W[p][a] over {(p, a) : a <= order - p}."""

    order: int
    n: int
    rows: list[np.ndarray]

    def value(self, p: int, a: int) -> float:
        return float(self.rows[p][a])

    def moment_column(self) -> np.ndarray:
        """The Legendre moments proper: W[p][0] for p = 0..order."""
        return np.array([row[0] for row in self.rows])


def moment_triangle(g, n: int, order: int, meter: Meter | None = None) -> MomentTriangle:
    """Full triangle of power-weighted moments from a geometric moment vector.

    ``g`` must reach exponent ``order`` (the W[1] seed at a = order - 1
    consumes G(order)).
    """
    g = np.asarray(g, dtype=float)
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if g.size < order + 1:
        raise ValueError(f"geometric moments reach exponent {g.size - 1}, "
                         f"order {order} needs {order}")
    inv = 1.0 / (n - 1)
    rows = [g[:order + 1] * inv]
    if order >= 1:
        rows.append((3.0 * inv) * g[1:order + 1])
    for p in range(2, order + 1):
        width = order - p + 1
        cp = (2 * p + 1) / p
        dp = (p - 1) / (2 * p - 3)
        rows.append(cp * (rows[p - 1][1:width + 1] - dp * rows[p - 2][:width]))
    if meter is not None:
        raw = meter.raw
        raw.scope("seed").mul(2 * order + 1)
        tri = raw.scope("triangle")
        cells = order * (order - 1) // 2 if order >= 2 else 0
        tri.add(cells)
        tri.mul(2 * cells)
        model_charge_recurrence(meter.model, order)
    return MomentTriangle(order=order, n=n, rows=rows)


def _fast_from_geometric(gmat: np.ndarray, n: int, order: int,
                         meter: Meter | None = None) -> np.ndarray:
    """Rolling two-row evaluation of the triangle for a batch of G vectors;
    returns the moment columns, shape (rows, order+1)."""
    nrows = gmat.shape[0]
    inv = 1.0 / (n - 1)
    out = np.empty((nrows, order + 1))
    prev2 = gmat[:, :order + 1] * inv
    out[:, 0] = prev2[:, 0]
    if order >= 1:
        prev1 = (3.0 * inv) * gmat[:, 1:order + 1]
        out[:, 1] = prev1[:, 0]
    for p in range(2, order + 1):
        width = order - p + 1
        cp = (2 * p + 1) / p
        dp = (p - 1) / (2 * p - 3)
        cur = cp * (prev1[:, 1:width + 1] - dp * prev2[:, :width])
        out[:, p] = cur[:, 0]
        prev2, prev1 = prev1, cur
    if meter is not None:
        raw = meter.raw
        raw.scope("seed").mul(nrows * (2 * order + 1))
        cells = order * (order - 1) // 2 if order >= 2 else 0
        tri = raw.scope("triangle")
        tri.add(nrows * cells)
        tri.mul(2 * nrows * cells)
        for _ in range(nrows):
            model_charge_recurrence(meter.model, order)
    return out


def _warn_high_order(order: int) -> None:
    if order > RECOMMENDED_MAX_ORDER:
        warnings.warn(
            f"order {order} exceeds {RECOMMENDED_MAX_ORDER}; x^a weights lose "
            f"relative precision (supported up to {SUPPORTED_MAX_ORDER})",
            RuntimeWarning, stacklevel=3)


def moments_1d_fast(values, order: int, meter: Meter | None = None,
                    force_general: bool = False,
                    exact: bool | None = None) -> np.ndarray:
    """Legendre moments of a 1-D signal by the recurrence pipeline.

    The signal class picks the geometric-moment path: constants use closed
    power sums, {0, v} signals the run path, everything else the cascade.
    ``force_general`` disables the dispatch (used to cross-check the special
    paths against the general one).
    """
    s = np.asarray(values)
    n = s.size
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    _warn_high_order(order)
    cls = None
    if not force_general:
        cls = classify_signal(s)
    if isinstance(cls, Constant):
        g = geometric_moments_constant(n, cls.level, order, meter)
    elif isinstance(cls, BinaryRuns):
        g = geometric_moments_binary_runs(n, cls.runs, cls.level, order, meter)
    else:
        g = geometric_moments(s, order, meter, exact=exact)
    return _fast_from_geometric(g[np.newaxis, :], n, order, meter)[0]


def moments_1d_direct(values, order: int, meter: Meter | None = None) -> np.ndarray:
    """Direct evaluation L_p = (2p+1)/(n-1) sum_i P_p(x_i) f(x_i); the oracle."""
    s = np.asarray(values, dtype=float)
    n = s.size
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    table = poly_eval_recurrence(order, legendre_grid(n))
    coef = (2 * np.arange(order + 1) + 1) / (n - 1)
    out = coef * (table @ s)
    if meter is not None:
        raw = meter.raw.scope("direct1d")
        raw.mul((order + 1) * (n + 1))
        raw.add((order + 1) * (n - 1))
    return out
