"""Integer power sums and an addition-only accumulation scheme for weighted sums.

The quantities of interest are H(a) = sum_{i=1}^{m} i^a (plain power sums,
closed forms and a binomial recurrence) and S(a) = sum_{i=1}^{n} i^a g_i
(power sums weighted by a signal g).

S(a) is computed in two stages. Stage one streams the signal once through a
bank of a_max+1 cascaded prefix-sum registers and performs additions only.
Processing the elements in descending index order leaves

    c_k = sum_i binom(i + k - 1, k) g_i        k = 0..a_max

in register k. Stage two recovers the power sums through the triangular
basis change

    i^a = sum_k (-1)^(a-k) k! stirling2(a, k) binom(i + k - 1, k)

whose coefficients are integers, so with integer inputs the whole pipeline
is exact. The descending traversal matters numerically: its register weights
grow with i exactly as i^a does, which keeps the basis change free of
catastrophic cancellation in double precision (an ascending traversal weights
early elements most and loses roughly a factor 2^a of precision, which is
fatal beyond a ~ 20).
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction

import numpy as np

from .metering import OpCounter

# Auto exact gate: integral signals up to this exponent use exact integers.
EXACT_AMAX_LIMIT = 20


def power_sum_closed(m: int, a: int) -> int:
    """Closed-form sum_{i=1}^{m} i^a for a in 1..4, exact integer arithmetic.

    The divisions by 6 and 30 are always exact for integer m.
    """
    if not 1 <= a <= 4:
        raise ValueError(f"closed forms cover a in 1..4, got a={a}")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if a == 1:
        return m * (m + 1) // 2
    if a == 2:
        return m * (m + 1) * (2 * m + 1) // 6
    if a == 3:
        return (m * (m + 1)) ** 2 // 4
    return m * (m + 1) * (2 * m + 1) * (3 * m * m + 3 * m + 1) // 30


def power_sum_recurrence(m: int, a_max: int, exact: bool = True):
    """Table H[a] = sum_{i=1}^{m} i^a for a = 0..a_max.

    Solves the binomial identity

        sum_{k=1}^{a} binom(a+1, k) H[k] = (m+1)^(a+1) - (m+1)

    for H[a]; the leading coefficient is a+1 and the division is exact.
    Exact mode returns a list of arbitrary-precision integers, approximate
    mode a float array (adequate until (m+1)^(a+1) exhausts double range).
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if a_max < 0:
        raise ValueError(f"a_max must be >= 0, got {a_max}")
    if exact:
        table = [0] * (a_max + 1)
        table[0] = m
        mp = m + 1
        for a in range(1, a_max + 1):
            rhs = mp ** (a + 1) - mp
            for k in range(1, a):
                rhs -= math.comb(a + 1, k) * table[k]
            q, r = divmod(rhs, a + 1)
            if r:
                raise ArithmeticError("power-sum recurrence division not exact")
            table[a] = q
        return table
    out = np.empty(a_max + 1)
    out[0] = m
    mp = float(m + 1)
    for a in range(1, a_max + 1):
        rhs = mp ** (a + 1) - mp
        for k in range(1, a):
            rhs -= math.comb(a + 1, k) * out[k]
        out[a] = rhs / (a + 1)
    return out


_h_cache: dict[int, list[int]] = {}


def _h_exact(m: int, a: int) -> int:
    """Cached H(a) for exact integer m >= 0."""
    table = _h_cache.get(m)
    if table is None or len(table) <= a:
        table = power_sum_recurrence(m, max(a, 8), exact=True)
        _h_cache[m] = table
    return table[a]


def signed_range_power_sum(lo: int, hi: int, a: int) -> int:
    """Exact sum_{j=lo}^{hi} j^a over consecutive integers, with 0^0 = 1.

    Split at zero and reduced to H tables: the negative part contributes
    (-1)^a (H(-lo) - H(-hi-1)) and zero contributes only at a = 0.
    """
    if lo > hi:
        raise ValueError(f"empty range {lo}..{hi}")
    if a < 0:
        raise ValueError(f"exponent must be >= 0, got {a}")
    total = 0
    if hi >= 1:
        total += _h_exact(hi, a) - _h_exact(max(lo, 1) - 1, a)
    if lo <= -1:
        mag = _h_exact(-lo, a) - _h_exact(-min(hi, -1) - 1, a)
        total += mag if a % 2 == 0 else -mag
    if a == 0 and lo <= 0 <= hi:
        total += 1
    return total


# --- cascade stage ---------------------------------------------------------

_conv_rows: list[list[int]] = [[1]]       # T[a][k] = (-1)^(a-k) k! stirling2(a, k)
_stirling_rows: list[list[int]] = [[1]]
_conv_float: dict[int, np.ndarray] = {}
_cache_lock = threading.Lock()


def conversion_coefficients(a_max: int) -> list[list[int]]:
    """Rows 0..a_max of the register-to-power-sum basis change (exact integers).

    Row a satisfies i^a = sum_k T[a][k] binom(i+k-1, k); the entries are
    signed Stirling set numbers scaled by k! and do not depend on the signal
    length, so one growing table serves every signal.
    """
    if len(_conv_rows) <= a_max:
        with _cache_lock:
            while len(_conv_rows) <= a_max:
                a = len(_stirling_rows)
                prev = _stirling_rows[-1]
                row = [0] * (a + 1)
                for k in range(1, a + 1):
                    row[k] = k * (prev[k] if k < a else 0) + prev[k - 1]
                _stirling_rows.append(row)
                _conv_rows.append([(-1) ** (a - k) * math.factorial(k) * row[k]
                                   for k in range(a + 1)])
    return _conv_rows[:a_max + 1]


def conversion_matrix(a_max: int) -> np.ndarray:
    """Float64 lower-triangular copy of conversion_coefficients."""
    mat = _conv_float.get(a_max)
    if mat is None:
        rows = conversion_coefficients(a_max)
        mat = np.zeros((a_max + 1, a_max + 1))
        for a, row in enumerate(rows):
            mat[a, :a + 1] = [float(t) for t in row]
        _conv_float[a_max] = mat
    return mat


def cascade_registers(rows: np.ndarray, a_max: int,
                      counter: OpCounter | None = None) -> np.ndarray:
    """Stage-one registers for every row of a 2-D float array.

    Equivalent to streaming each row once (descending index) through a_max+1
    cascaded accumulators; implemented as repeated row-wise prefix sums over
    the reversed rows, which performs the identical additions in the
    identical order. Additions only.
    """
    nrows, n = rows.shape
    out = np.empty((nrows, a_max + 1))
    cur = rows[:, ::-1]
    for k in range(a_max + 1):
        cur = np.cumsum(cur, axis=1)
        out[:, k] = cur[:, -1]
    if counter is not None:
        counter.scope("cascade").add(nrows * n * (a_max + 1))
    return out


def registers_to_power_sums(regs: np.ndarray, a_max: int,
                            counter: OpCounter | None = None,
                            parity: str | None = None) -> np.ndarray:
    """Stage-two basis change for a batch of register vectors.

    ``parity`` restricts the conversion to even or odd exponents (the other
    columns stay zero); O(a_max^2) multiplications per signal either way.
    """
    nrows = regs.shape[0]
    tmat = conversion_matrix(a_max)
    out = np.zeros((nrows, a_max + 1))
    start = 0 if parity != "odd" else 1
    step = 1 if parity is None else 2
    mults = adds = 0
    for a in range(start, a_max + 1, step):
        acc = tmat[a, 0] * regs[:, 0]
        for k in range(1, a + 1):
            acc += tmat[a, k] * regs[:, k]
        out[:, a] = acc
        mults += a + 1
        adds += a
    if counter is not None:
        conv = counter.scope("convert")
        conv.mul(nrows * mults)
        conv.add(nrows * adds)
    return out


def _registers_exact(values: list[int], a_max: int,
                     counter: OpCounter | None = None) -> list[int]:
    """Exact-integer stage one: descending-index pass, additions only."""
    acc = [0] * (a_max + 1)
    for v in reversed(values):
        acc[0] += v
        for k in range(1, a_max + 1):
            acc[k] += acc[k - 1]
    if counter is not None:
        counter.scope("cascade").add(len(values) * (a_max + 1))
    return acc


def _convert_exact(regs: list[int], a_max: int,
                   counter: OpCounter | None = None,
                   parity: str | None = None) -> dict[int, int]:
    """Exact-integer stage two; returns {a: S(a)} for the selected parity."""
    rows = conversion_coefficients(a_max)
    start = 0 if parity != "odd" else 1
    step = 1 if parity is None else 2
    out = {}
    mults = adds = 0
    for a in range(start, a_max + 1, step):
        row = rows[a]
        out[a] = sum(row[k] * regs[k] for k in range(a + 1))
        mults += a + 1
        adds += a
    if counter is not None:
        conv = counter.scope("convert")
        conv.mul(mults)
        conv.add(adds)
    return out


def _is_integral(values) -> bool:
    if isinstance(values, np.ndarray):
        return np.issubdtype(values.dtype, np.integer)
    return all(isinstance(v, (int, np.integer)) for v in values)


def cascade_power_sums(g, a_max: int, counter: OpCounter | None = None,
                       exact: bool | None = None):
    """Weighted power sums S[a] = sum_{i=1}^{len(g)} i^a g_i for a = 0..a_max.

    Stage one is the addition-only register pass (charged to the ``cascade``
    scope, whose multiplication count is zero by construction); stage two is
    the triangular basis change, O(a_max^2) multiplications independent of
    the signal length.

    ``exact=None`` selects exact integer arithmetic when the input is
    integral and a_max <= 20, double precision otherwise. Exact mode returns
    a list of ints, double mode a float array.
    """
    if a_max < 0:
        raise ValueError(f"a_max must be >= 0, got {a_max}")
    if isinstance(g, np.ndarray):
        values = g
        n = g.size
    else:
        values = list(g)
        n = len(values)
    if n == 0:
        raise ValueError("empty signal")
    if exact is None:
        exact = _is_integral(values) and a_max <= EXACT_AMAX_LIMIT
    if exact:
        ints = [int(v) for v in (values.tolist() if isinstance(values, np.ndarray)
                                 else values)]
        regs = _registers_exact(ints, a_max, counter)
        by_a = _convert_exact(regs, a_max, counter)
        return [by_a[a] for a in range(a_max + 1)]
    arr = np.asarray(values, dtype=float).reshape(1, -1)
    regs = cascade_registers(arr, a_max, counter)
    return registers_to_power_sums(regs, a_max, counter)[0]


def exact_ratio(num: int, den: int) -> float:
    """Correctly rounded float of the exact integer ratio num/den."""
    if den == 1:
        return float(num)
    return float(Fraction(num, den))
