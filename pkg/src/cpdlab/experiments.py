"""Monte Carlo experiments on the condition number.

* :func:`sample_condition_numbers` evaluates kappa on random decompositions,
  optionally fanned out over worker processes;
* :func:`estimate_ccdf`, :func:`quantile` and :func:`fit_tail` turn samples
  into an empirical ccdf ``P[kappa^power > x]`` and a tail model ``a x^-b``;
* :func:`perturbation_sweep` perturbs ill-posed decompositions and records
  the weighted distance next to the inverse condition number.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from threadpoolctl import threadpool_limits

from .condition import condition_number, condition_numbers_batch
from .errors import EmptyDistributionError, InsufficientDataError, InvalidArgumentError
from .geometry import weighted_distance
from .sampling import (
    STREAM_ANCHORS,
    STREAM_PERTURBATIONS,
    STREAM_TUPLES,
    NormalStream,
    SampleSpec,
    illposed_shared_first_factor,
    perturb_tuple,
)
from .tensor import TensorFormat

logger = logging.getLogger(__name__)

__all__ = [
    "CcdfTable",
    "TailFit",
    "PerturbRecord",
    "sample_condition_numbers",
    "estimate_ccdf",
    "default_window",
    "fit_tail",
    "quantile",
    "moment_summary",
    "perturbation_sweep",
    "check_perturb_records",
    "available_threads",
]

MIN_FIT_POINTS = 10
CHUNK = 256


def available_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


# --------------------------------------------------------------------------- #
# Sampling
# --------------------------------------------------------------------------- #


def _random_factor_stacks(spec: SampleSpec, start: int, stop: int) -> list[NDArray[np.float64]]:
    """Factors of random tuples ``start..stop-1`` as ``(B, r, n_k)`` arrays.

    Uses the same stream layout as :func:`cpdlab.sampling.random_rank1_tuple`.
    """
    dims = spec.format.dims
    width = sum(dims)
    flat = np.stack([
        NormalStream(spec.seed, STREAM_TUPLES, 0, 0, i).standard_normal(spec.r * width)
        for i in range(start, stop)
    ]).reshape(stop - start, spec.r, width)
    cuts = np.cumsum((0,) + dims)
    return [flat[:, :, a:b] for a, b in zip(cuts[:-1], cuts[1:])]


def _kappa_chunk(args: tuple[SampleSpec, int, int]) -> NDArray[np.float64]:
    spec, start, stop = args
    with threadpool_limits(limits=1):
        return condition_numbers_batch(_random_factor_stacks(spec, start, stop))


def sample_condition_numbers(spec: SampleSpec, threads: int = 1,
                             chunk: int = CHUNK) -> NDArray[np.float64]:
    """Condition numbers of random tuples ``0..count-1`` of ``spec``.

    Entry ``i`` depends only on ``(spec, i)``; ``threads`` changes wall time,
    never the values. Ill-posed samples are ``inf``.
    """
    logger.debug("sampling %d tuples of format %s, r=%d, threads=%d",
                 spec.count, spec.format, spec.r, threads)
    bounds = [(spec, s, min(s + chunk, spec.count)) for s in range(0, spec.count, chunk)]
    if threads <= 1 or len(bounds) == 1:
        parts = [_kappa_chunk(b) for b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_kappa_chunk, bounds))
    return np.concatenate(parts)


# --------------------------------------------------------------------------- #
# Empirical ccdf
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class CcdfTable:
    """Empirical ``P[X > x]`` at each finite sample ``x`` (ascending).

    ``+inf`` samples are not stored in ``x`` but count as exceeding every
    finite value.
    """

    x: NDArray[np.float64]
    ccdf: NDArray[np.float64]
    infinite_count: int
    total: int
    power: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def finite_count(self) -> int:
        return int(self.x.size)

    def ccdf_at(self, value: float) -> float:
        greater = self.x.size - np.searchsorted(self.x, value, side="right")
        return float((greater + self.infinite_count) / self.total)

    def to_csv(self, path: str | Path) -> Path:
        """Write ``x,ccdf`` rows and a JSON sidecar next to it (``.json`` suffix)."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write("x,ccdf\n")
            fh.writelines(f"{x!r},{p!r}\n" for x, p in zip(self.x.tolist(), self.ccdf.tolist()))
        sidecar = {"total": self.total, "infinite_count": self.infinite_count,
                   "power": self.power}
        sidecar.update(self.meta)
        side = path.with_suffix(".json")
        side.write_text(json.dumps(sidecar, sort_keys=True) + "\n")
        return side

    @classmethod
    def from_csv(cls, path: str | Path) -> "CcdfTable":
        """Read a ccdf CSV; the sidecar, when present, supplies the totals."""
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["x", "ccdf"]:
                raise InvalidArgumentError(f"{path}: expected header 'x,ccdf'")
            try:
                rows = [(float(a), float(b)) for a, b in reader]
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}: malformed row ({exc})") from exc
        data = np.array(rows, dtype=np.float64).reshape(-1, 2)
        side = path.with_suffix(".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        total = int(meta.pop("total", data.shape[0]))
        inf_count = int(meta.pop("infinite_count", 0))
        power = int(meta.pop("power", 1))
        return cls(data[:, 0], data[:, 1], inf_count, total, power, meta)

    @classmethod
    def from_model(cls, a: float, b: float, x: ArrayLike, total: int | None = None) -> "CcdfTable":
        """Exact table ``ccdf = a x^-b`` on the grid ``x`` (for testing fits)."""
        x = np.sort(np.asarray(x, dtype=np.float64))
        return cls(x, a * x ** (-b), 0, total or x.size)


def estimate_ccdf(samples: Iterable[float], power: int = 1) -> CcdfTable:
    """Empirical ccdf of ``kappa**power`` with the strict convention ``P[X > x]``."""
    if power < 1:
        raise InvalidArgumentError(f"power must be >= 1, got {power}")
    if not isinstance(samples, np.ndarray):
        samples = [getattr(s, "kappa", s) for s in samples]
    kappa = np.asarray(samples, dtype=np.float64).reshape(-1)
    infinite = np.isinf(kappa)
    finite = np.sort(kappa[~infinite])
    if finite.size == 0:
        raise EmptyDistributionError("no finite samples")
    x = finite ** power
    total = kappa.size
    greater = finite.size - np.searchsorted(x, x, side="right")
    ccdf = (greater + int(infinite.sum())) / total
    return CcdfTable(x, ccdf, int(infinite.sum()), total, power)


def quantile(table: CcdfTable, p: float) -> float:
    """Smallest sample ``x`` with ``P[X > x] <= p``; ``inf`` if the infinite mass exceeds ``p``."""
    if not 0 < p < 1:
        raise InvalidArgumentError(f"p must lie in (0, 1), got {p}")
    if table.x.size == 0:
        raise EmptyDistributionError("empty ccdf table")
    hits = np.flatnonzero(table.ccdf <= p)
    if hits.size == 0:
        return math.inf
    return float(table.x[hits[0]])


# --------------------------------------------------------------------------- #
# Tail model
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit of ``log ccdf = log a - b log x`` on a probability window."""

    a: float
    b: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    b_stderr: float = math.nan

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "r_squared": self.r_squared,
                "window_low": self.window[0], "window_high": self.window[1],
                "n_points": self.n_points}

    def predict(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.a * np.asarray(x, dtype=np.float64) ** (-self.b)


def default_window(total: int) -> tuple[float, float]:
    """``[max(1e-5, 100/N), 1e-2]``: drop the 100 largest samples and everything above 1%."""
    return max(1e-5, 100.0 / total), 1e-2


def fit_tail(table: CcdfTable, window: tuple[float, float] | None = None) -> TailFit:
    if window is None:
        window = default_window(table.total)
        if window[0] > window[1]:
            raise InsufficientDataError(
                f"the default window needs at least 10^4 samples, got {table.total}"
            )
    lo, hi = window
    if not 0 < lo <= hi <= 1:
        raise InvalidArgumentError(f"invalid window {window}")
    mask = (table.ccdf >= lo) & (table.ccdf <= hi) & (table.x > 0)
    n = int(mask.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {n} points with ccdf in [{lo:g}, {hi:g}], need {MIN_FIT_POINTS}"
        )
    lx = np.log(table.x[mask])
    ly = np.log(table.ccdf[mask])
    design = np.column_stack((np.ones(n), lx))
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    ss_res = float(resid @ resid)
    centered = ly - ly.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sxx = float(((lx - lx.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 and sxx > 0 else math.nan
    return TailFit(float(np.exp(coef[0])), float(-coef[1]), r2, (lo, hi), n, stderr)


def moment_summary(kappa: ArrayLike, fit: TailFit, power: int,
                   ks: Sequence[int] | None = None) -> list[dict]:
    """Empirical means of ``kappa**k`` next to the fitted integrability test ``k < power * b``.

    The empirical means are reported as-is; they need not converge when the
    true moment is infinite.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    finite = kappa[np.isfinite(kappa)]
    ks = range(1, power + 1) if ks is None else ks
    return [
        {"k": int(k), "empirical_mean": float(np.mean(finite ** k)),
         "critical_k": power * fit.b, "finite_under_fit": bool(k < power * fit.b)}
        for k in ks
    ]


# --------------------------------------------------------------------------- #
# Perturbation sweep
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class PerturbRecord:
    r: int
    anchor_index: int
    perturb_index: int
    dist_w: float
    inv_kappa: float
    seed: int = 0

    CSV_FIELDS = ("r", "anchor_index", "perturb_index", "dist_w", "inv_kappa")

    def row(self) -> list:
        return [self.r, self.anchor_index, self.perturb_index, self.dist_w, self.inv_kappa]

    def satisfies_bound(self, slack: float = 1e-10) -> bool:
        return self.inv_kappa <= self.dist_w + slack


def perturbation_sweep(fmt: TensorFormat | Sequence[int], r: int, n_anchors: int = 20,
                       n_perturbations: int = 50, scale: float = 1e-2,
                       seed: int = 0) -> list[PerturbRecord]:
    """Perturb random ill-posed decompositions and record ``(dist_w, 1/kappa)``.

    Anchor ``j`` is a shared-first-factor decomposition drawn from stream
    ``(seed, anchors, r, j)``; its ``p``-th perturbation adds ``scale``-sized
    Gaussian noise from stream ``(seed, perturbations, r, j, p)``. An infinite
    condition number is recorded as ``inv_kappa = 0``.
    """
    fmt = fmt if isinstance(fmt, TensorFormat) else TensorFormat(fmt)
    records = []
    for j in range(n_anchors):
        anchor = illposed_shared_first_factor(fmt, r, NormalStream(seed, STREAM_ANCHORS, 0, r, j))
        for p in range(n_perturbations):
            rng = NormalStream(seed, STREAM_PERTURBATIONS, r, j, p)
            b = perturb_tuple(anchor, scale, rng)
            res = condition_number(b)
            inv = 0.0 if res.infinite else 1.0 / res.kappa
            records.append(PerturbRecord(r, j, p, weighted_distance(anchor, b), inv, seed))
    return records


def check_perturb_records(records: Iterable[PerturbRecord], slack: float = 1e-10) -> list[PerturbRecord]:
    """Records violating ``1/kappa <= dist_w + slack``."""
    return [rec for rec in records if not rec.satisfies_bound(slack)]
