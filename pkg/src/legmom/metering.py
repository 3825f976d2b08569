"""Operation counters, closed-form complexity predictions and a benchmark harness.

Two counting conventions coexist and are always reported side by side:

* ``raw`` counters tally the scalar additions/multiplications the code
  actually performs (vectorised kernels charge in bulk, so instrumentation
  stays cheap).
* ``model`` counters charge each pipeline stage with the idealised per-stage
  cost that the closed-form predictors below are built from: one
  multiplication and one addition per (pixel, moment) pair for the direct
  method, and the per-signal stage terms for the fast method.

The raw counts of the shared-accumulator cascade are considerably lower than
the model counts (the model assumes one accumulator pass per exponent); both
views are honest answers to different questions, so neither is dropped.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass


class OpCounter:
    """Tally of additions, multiplications and power evaluations.

    Counters form a tree: ``scope(name)`` returns a child counter and the
    ``total_*`` properties aggregate over the subtree, so per-stage tallies
    always sum to the whole-run totals.
    """

    __slots__ = ("adds", "mults", "pows", "_children")

    def __init__(self):
        self.adds = 0
        self.mults = 0
        self.pows = 0
        self._children: dict[str, OpCounter] = {}

    def add(self, n: int = 1) -> None:
        self.adds += n

    def mul(self, n: int = 1) -> None:
        self.mults += n

    def power(self, n: int = 1) -> None:
        self.pows += n

    def scope(self, name: str) -> "OpCounter":
        child = self._children.get(name)
        if child is None:
            child = OpCounter()
            self._children[name] = child
        return child

    @property
    def children(self) -> dict:
        return dict(self._children)

    @property
    def total_adds(self) -> int:
        return self.adds + sum(c.total_adds for c in self._children.values())

    @property
    def total_mults(self) -> int:
        return self.mults + sum(c.total_mults for c in self._children.values())

    @property
    def total_pows(self) -> int:
        return self.pows + sum(c.total_pows for c in self._children.values())

    def merge(self, other: "OpCounter") -> None:
        """Fold another counter tree into this one (joins per-worker counters)."""
        self.adds += other.adds
        self.mults += other.mults
        self.pows += other.pows
        for name, child in other._children.items():
            self.scope(name).merge(child)

    def as_dict(self) -> dict:
        out = {"adds": self.adds, "mults": self.mults, "pows": self.pows}
        if self._children:
            out["scopes"] = {k: v.as_dict() for k, v in self._children.items()}
        return out

    def __repr__(self):
        return (f"OpCounter(adds={self.total_adds}, mults={self.total_mults}, "
                f"pows={self.total_pows})")


class Meter:
    """The raw and model counter trees threaded through a computation."""

    __slots__ = ("raw", "model")

    def __init__(self):
        self.raw = OpCounter()
        self.model = OpCounter()

    def merge(self, other: "Meter") -> None:
        self.raw.merge(other.raw)
        self.model.merge(other.model)


def predict_direct_mults(n: int, order: int) -> int:
    """Multiplication count of the direct method for a square n x n image.

    One multiplication per (pixel, moment) pair: n^2 (M+1)(M+2)/2. The
    instrumented model counter of the direct method reproduces this exactly.
    """
    if n < 2:
        raise ValueError(f"image side must be >= 2, got {n}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    return n * n * (order + 1) * (order + 2) // 2


@dataclass(frozen=True)
class FastPrediction:
    """Closed-form operation estimates for the fast method.

    ``mults`` is the exact row-wise triangle total 2 M (M-1) N.  The smooth
    estimate ``mults_formula`` = 2 N M^2 + 2 M^3 / 3 does not agree with it
    (861 867 vs 798 720 at N=256, M=40); both are carried and the benchmark
    report flags the discrepancy rather than picking a winner.
    """

    adds: float
    mults: int
    mults_formula: float


def predict_fast(n: int, order: int, parity: str) -> FastPrediction:
    """Closed-form estimates for the fast method at image side n, order M.

    Additions: M^2 N^2 / 2 + M^3 N / 12 for odd N, twice that leading term
    (M^2 N^2 + M^3 N / 6) for even N, whose interleaved accumulation touches
    twice as many slots.
    """
    if n < 2:
        raise ValueError(f"image side must be >= 2, got {n}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    m = order
    if parity == "odd":
        adds = m * m * n * n / 2 + m ** 3 * n / 12
    elif parity == "even":
        adds = float(m * m * n * n) + m ** 3 * n / 6
    else:
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    return FastPrediction(
        adds=adds,
        mults=2 * m * max(m - 1, 0) * n,
        mults_formula=2.0 * n * m * m + 2.0 * m ** 3 / 3.0,
    )


def model_charge_geometric(counter: OpCounter, n: int, a_max: int) -> None:
    """Charge the idealised cost of the geometric-moment step for one signal.

    (A+1)^2 (n/2 - 1) additions per signal, doubled for even lengths.
    """
    base = (a_max + 1) ** 2 * max((n - 2) // 2, 0)
    if n % 2 == 0:
        base *= 2
    counter.scope("gstep").add(base)


def model_charge_recurrence(counter: OpCounter, order: int) -> None:
    """Charge the idealised triangle cost for one signal at the given order:
    M(M-1)/2 additions and 2M(M-1) multiplications."""
    if order >= 2:
        counter.scope("triangle").add(order * (order - 1) // 2)
        counter.scope("triangle").mul(2 * order * (order - 1))


@dataclass
class BenchRecord:
    method: str
    nx: int
    ny: int
    order: int
    adds: int
    mults: int
    pows: int
    model_adds: int
    model_mults: int
    predicted_adds: float
    predicted_mults: float
    predicted_mults_formula: float | None
    wall_ns: int
    wall_ns_uncounted: int
    label: str = ""


REPORT_HEADER = "# legmoment-bench v1"


def bench(image, order: int, repetitions: int = 3, methods=("fast", "direct"),
          workers: int = 1, label: str = "") -> list[BenchRecord]:
    """Run the fast and direct methods on one image with counters and timers.

    Results of the two methods are checked for agreement as a side effect
    (they must describe the same image). Wall time is the median over
    ``repetitions`` runs; a second timing pass with counters disabled is
    reported so the instrumentation overhead is visible.
    """
    from . import legendre2d  # local import: legendre2d itself meters through here

    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    runners = {
        "fast": lambda meter: legendre2d.moments_2d_fast(
            image, order, meter=meter, workers=workers),
        "direct": lambda meter: legendre2d.moments_2d_direct(image, order, meter=meter),
    }
    records = []
    for method in methods:
        run = runners[method]
        meter = Meter()
        run(meter)
        timed = []
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            run(Meter())
            timed.append(time.perf_counter_ns() - t0)
        bare = []
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            run(None)
            bare.append(time.perf_counter_ns() - t0)
        nx, ny = image.width, image.height
        if method == "direct":
            pred_adds = pred_mults = float(predict_direct_mults(min(nx, ny), order)) \
                if nx == ny else float(nx * ny * (order + 1) * (order + 2) // 2)
            pred_formula = None
        else:
            pred = predict_fast(nx, order, "odd" if nx % 2 else "even")
            pred_adds = pred.adds
            pred_mults = float(pred.mults)
            pred_formula = pred.mults_formula
        records.append(BenchRecord(
            method=method, nx=nx, ny=ny, order=order,
            adds=meter.raw.total_adds, mults=meter.raw.total_mults,
            pows=meter.raw.total_pows,
            model_adds=meter.model.total_adds, model_mults=meter.model.total_mults,
            predicted_adds=pred_adds, predicted_mults=pred_mults,
            predicted_mults_formula=pred_formula,
            wall_ns=int(statistics.median(timed)),
            wall_ns_uncounted=int(statistics.median(bare)),
            label=label,
        ))
    return records


def format_records(records) -> str:
    """Machine-readable report: one key=value block per run."""
    blocks = []
    for r in records:
        lines = [
            REPORT_HEADER,
            f"method={r.method}",
            f"N={r.nx}",
            f"M={r.order}",
            f"adds={r.adds}",
            f"mults={r.mults}",
            f"predicted_adds={r.predicted_adds:.0f}",
            f"predicted_mults={r.predicted_mults:.0f}",
            f"wall_ns={r.wall_ns}",
            f"pows={r.pows}",
            f"model_adds={r.model_adds}",
            f"model_mults={r.model_mults}",
            f"wall_ns_uncounted={r.wall_ns_uncounted}",
        ]
        if r.nx != r.ny:
            lines.insert(3, f"Ny={r.ny}")
        if r.predicted_mults_formula is not None:
            lines.append(f"predicted_mults_formula={r.predicted_mults_formula:.0f}")
        if r.label:
            lines.append(f"image={r.label}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def format_table(records) -> str:
    """Human-readable summary table for a list of benchmark records."""
    header = (f"{'image':<14}{'method':<8}{'N':>6}{'M':>4}{'adds':>14}{'mults':>14}"
              f"{'model adds':>14}{'model mults':>13}{'wall ms':>10}")
    rows = [header, "-" * len(header)]
    for r in records:
        rows.append(
            f"{(r.label or '-'):<14}{r.method:<8}{r.nx:>6}{r.order:>4}"
            f"{r.adds:>14}{r.mults:>14}{r.model_adds:>14}{r.model_mults:>13}"
            f"{r.wall_ns / 1e6:>10.2f}")
    fasts = [r for r in records if r.method == "fast"]
    if fasts:
        rows.append("")
        rows.append("note: the two fast multiplication predictions disagree by design; "
                    "the row-form 2M(M-1)N and the smooth 2NM^2+2M^3/3 are both shown.")
    return "\n".join(rows) + "\n"
