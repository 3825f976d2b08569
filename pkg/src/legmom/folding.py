"""Signal folding and geometric moment vectors on the inclusive [-1, 1] grid.

A length-N signal sampled at x_i = (2i - N - 1)/(N - 1) folds about its
centre into symmetric and antisymmetric halves; even exponents of x see only
the symmetric half and odd exponents the antisymmetric one, so the geometric
moments G(a) = sum_i x_i^a f(x_i) reduce to integer-weighted half-length
sums that the addition-only cascade handles. Odd lengths fold to L = (N-1)/2
terms with integer weights i = 1..L; even lengths carry weights (2i-1) and
are zero-interleaved to length 2L so the weights are again consecutive
integers (at the price of twice the additions, which is the documented cost
of the even case).

Constant signals bypass the cascade entirely via plain power-sum tables, and
{0, v} signals reduce to signed power sums over their run boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import power_sums as ps
from .metering import Meter, model_charge_geometric


@dataclass(frozen=True)
class FoldedSignal:
    """Symmetric/antisymmetric halves of a signal about its centre.

    ``half`` is L; the original length is 2L+1 (odd parity, with ``center``
    recorded) or 2L (even parity, with the zero-interleaved length-2L arrays
    populated). The original signal is recoverable as (sym +- antisym)/2
    plus the centre sample.
    """

    parity: str
    half: int
    sym: np.ndarray
    antisym: np.ndarray
    center: float | None = None
    interleaved_sym: np.ndarray | None = None
    interleaved_antisym: np.ndarray | None = None


def fold_signal(values) -> FoldedSignal:
    s = np.asarray(values)
    n = s.size
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    half = n // 2
    if n % 2:
        antisym = s[half + 1:] - s[half - 1::-1]
        sym = s[half + 1:] + s[half - 1::-1]
        return FoldedSignal(parity="odd", half=half, sym=sym, antisym=antisym,
                            center=s[half].item())
    antisym = s[half:] - s[half - 1::-1]
    sym = s[half:] + s[half - 1::-1]
    return FoldedSignal(parity="even", half=half, sym=sym, antisym=antisym,
                        interleaved_sym=_interleave(sym),
                        interleaved_antisym=_interleave(antisym))


def _interleave(g: np.ndarray) -> np.ndarray:
    out = np.zeros(2 * g.size, dtype=g.dtype)
    out[0::2] = g
    return out


_inv_power_cache: dict[tuple[int, int], np.ndarray] = {}


def _inv_powers(base: int, a_max: int, meter: Meter | None) -> np.ndarray:
    key = (base, a_max)
    inv = _inv_power_cache.get(key)
    if inv is None:
        inv = np.array([1.0 / float(base ** a) for a in range(a_max + 1)])
        _inv_power_cache[key] = inv
    if meter is not None:
        meter.raw.scope("scale").power(a_max)
    return inv


def geometric_moments_rows(mat: np.ndarray, a_max: int,
                           meter: Meter | None = None) -> np.ndarray:
    """G vectors for every row of a float matrix (general signals, double path).

    Each row is folded, both halves go through the cascade, and the
    exponents are converted parity-wise: odd a from the antisymmetric half,
    even a from the symmetric one. Scaling by the grid denominator happens
    once per exponent, after the cascade, so the accumulation stage stays
    addition-only.
    """
    nrows, n = mat.shape
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    half = n // 2
    raw = meter.raw if meter is not None else None
    if n % 2:
        antisym = mat[:, half + 1:] - mat[:, half - 1::-1]
        sym = mat[:, half + 1:] + mat[:, half - 1::-1]
        center = mat[:, half]
        denom = half
    else:
        g_anti = mat[:, half:] - mat[:, half - 1::-1]
        g_sym = mat[:, half:] + mat[:, half - 1::-1]
        antisym = np.zeros((nrows, n))
        antisym[:, 0::2] = g_anti
        sym = np.zeros((nrows, n))
        sym[:, 0::2] = g_sym
        center = None
        denom = n - 1
    if raw is not None:
        raw.scope("fold").add(2 * nrows * half)
    regs_odd = ps.cascade_registers(np.ascontiguousarray(antisym, dtype=float),
                                    a_max, raw)
    regs_even = ps.cascade_registers(np.ascontiguousarray(sym, dtype=float),
                                     a_max, raw)
    s_odd = ps.registers_to_power_sums(regs_odd, a_max, raw, parity="odd")
    s_even = ps.registers_to_power_sums(regs_even, a_max, raw, parity="even")
    sums = s_even
    if a_max >= 1:
        sums[:, 1::2] = s_odd[:, 1::2]
    inv = _inv_powers(denom, a_max, meter)
    out = sums * inv[np.newaxis, :]
    if raw is not None:
        raw.scope("scale").mul(nrows * (a_max + 1))
    if center is not None:
        out[:, 0] = center + sums[:, 0]
        if raw is not None:
            raw.scope("scale").add(nrows)
    if meter is not None:
        for _ in range(nrows):
            model_charge_geometric(meter.model, n, a_max)
    return out


def _geometric_exact(values: list[int], a_max: int,
                     meter: Meter | None = None) -> np.ndarray:
    """Exact-integer G vector for an integral signal; each entry is the
    correctly rounded double of an exact rational."""
    n = len(values)
    half = n // 2
    raw = meter.raw if meter is not None else None
    if n % 2:
        antisym = [values[half + i] - values[half - i] for i in range(1, half + 1)]
        sym = [values[half + i] + values[half - i] for i in range(1, half + 1)]
        center = values[half]
        denom = half
    else:
        g_anti = [values[half + i - 1] - values[half - i] for i in range(1, half + 1)]
        g_sym = [values[half + i - 1] + values[half - i] for i in range(1, half + 1)]
        antisym = [0] * n
        antisym[0::2] = g_anti
        sym = [0] * n
        sym[0::2] = g_sym
        center = None
        denom = n - 1
    if raw is not None:
        raw.scope("fold").add(2 * half)
    regs_odd = ps._registers_exact(antisym, a_max, raw)
    regs_even = ps._registers_exact(sym, a_max, raw)
    nums = ps._convert_exact(regs_even, a_max, raw, parity="even")
    nums.update(ps._convert_exact(regs_odd, a_max, raw, parity="odd"))
    out = np.empty(a_max + 1)
    for a in range(a_max + 1):
        out[a] = ps.exact_ratio(nums[a], denom ** a)
    if raw is not None:
        raw.scope("scale").mul(a_max + 1)
        raw.scope("scale").power(a_max)
    if center is not None:
        out[0] = float(center + nums[0])
        if raw is not None:
            raw.scope("scale").add(1)
    if meter is not None:
        model_charge_geometric(meter.model, n, a_max)
    return out


def geometric_moments(values, a_max: int, meter: Meter | None = None,
                      exact: bool | None = None) -> np.ndarray:
    """G[a] = sum_i x_i^a f(x_i) for a = 0..a_max, general signal path.

    ``exact=None`` routes integral signals with a_max <= 20 through exact
    integer arithmetic (one correctly rounded double per entry); all other
    signals use the double-precision cascade.
    """
    s = np.asarray(values)
    if s.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {s.shape}")
    if s.size < 2:
        raise ValueError(f"signal length must be >= 2, got {s.size}")
    if a_max < 0:
        raise ValueError(f"a_max must be >= 0, got {a_max}")
    integral = np.issubdtype(s.dtype, np.integer)
    if exact is None:
        exact = integral and a_max <= ps.EXACT_AMAX_LIMIT
    if exact and integral:
        return _geometric_exact([int(v) for v in s.tolist()], a_max, meter)
    return geometric_moments_rows(np.asarray(s, dtype=float)[np.newaxis, :],
                                  a_max, meter)[0]


def geometric_moments_constant(n: int, level, a_max: int,
                               meter: Meter | None = None) -> np.ndarray:
    """G vector of the constant signal f = level, with no per-sample work.

    Odd exponents vanish by symmetry; even ones come from cached power-sum
    tables, so the cost depends on a_max only.
    """
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    nums, denom = _constant_numerators(n, a_max)
    out = np.zeros(a_max + 1)
    level_int = int(level) if float(level).is_integer() else None
    for a in range(0, a_max + 1, 2):
        if level_int is not None:
            out[a] = ps.exact_ratio(level_int * nums[a], denom ** a)
        else:
            out[a] = level * ps.exact_ratio(nums[a], denom ** a)
    if n % 2:
        out[0] = float(level_int * n) if level_int is not None else level * n
    if meter is not None:
        for c in (meter.raw, meter.model):
            c.scope("constant").mul(a_max // 2 + 1)
    return out


_const_cache: dict[tuple[int, int], tuple[list[int], int]] = {}


def _constant_numerators(n: int, a_max: int) -> tuple[list[int], int]:
    """Integer numerators of G(a)/level for a constant signal, per parity rules:
    2 H_L(a) over L^a for odd n = 2L+1, 2 (H_2L(a) - 2^a H_L(a)) over (2L-1)^a
    for even n = 2L."""
    key = (n, a_max)
    hit = _const_cache.get(key)
    if hit is not None:
        return hit
    half = n // 2
    if n % 2:
        table = ps.power_sum_recurrence(half, a_max, exact=True)
        nums = [2 * table[a] for a in range(a_max + 1)]
        denom = half
    else:
        full = ps.power_sum_recurrence(n, a_max, exact=True)
        halftab = ps.power_sum_recurrence(half, a_max, exact=True)
        nums = [2 * (full[a] - (1 << a) * halftab[a]) for a in range(a_max + 1)]
        denom = n - 1
    _const_cache[key] = (nums, denom)
    return nums, denom


def geometric_moments_binary_runs(n: int, runs, level, a_max: int,
                                  meter: Meter | None = None) -> np.ndarray:
    """G vector of a {0, level} signal given 1-based inclusive runs of level.

    Each exponent needs one signed power sum per run (two for even lengths,
    where the grid numerators are the odd integers), so the cost is
    O(#runs * a_max) table lookups instead of O(n * a_max) additions.
    """
    if n < 2:
        raise ValueError(f"signal length must be >= 2, got {n}")
    _validate_runs(runs, n)
    half = n // 2
    odd = bool(n % 2)
    denom = half if odd else n - 1
    nums = [0] * (a_max + 1)
    for a in range(a_max + 1):
        total = 0
        for c, d in runs:
            if odd:
                total += ps.signed_range_power_sum(c - half - 1, d - half - 1, a)
            else:
                total += ps.signed_range_power_sum(2 * c - n - 1, 2 * d - n - 1, a)
                if d > c:
                    total -= (1 << a) * ps.signed_range_power_sum(c - half, d - half - 1, a)
        nums[a] = total
    out = np.empty(a_max + 1)
    level_int = int(level) if float(level).is_integer() else None
    for a in range(a_max + 1):
        if level_int is not None:
            out[a] = ps.exact_ratio(level_int * nums[a], denom ** a)
        else:
            out[a] = level * ps.exact_ratio(nums[a], denom ** a)
    if meter is not None:
        charge = len(runs) * (a_max + 1) * (2 - odd)
        for c in (meter.raw, meter.model):
            c.scope("runs").add(charge)
            c.scope("runs").mul(a_max + 1)
    return out


def _validate_runs(runs, n: int) -> None:
    prev_stop = 0
    for c, d in runs:
        if not (1 <= c <= d <= n):
            raise ValueError(f"run ({c}, {d}) outside [1, {n}]")
        if c <= prev_stop:
            raise ValueError(f"run ({c}, {d}) overlaps or is out of order")
        prev_stop = d
