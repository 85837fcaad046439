"""Empirical rate fits and exact bound-violation counts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import ArgumentError
from ..trace import SolverTrace


@dataclass(frozen=True)
class RateReport:
    slope: float
    theory_slope: float
    bound_violations: int
    window: tuple
    intercept: float = math.nan
    points: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _gaps(trace_or_gaps):
    if isinstance(trace_or_gaps, SolverTrace):
        return trace_or_gaps.column("k"), trace_or_gaps.column("gap")
    gaps = np.asarray(trace_or_gaps, dtype=float)
    return np.arange(gaps.size, dtype=float), gaps


def count_violations(trace_or_gaps, bound: Callable[[int], float], kmin: int = 1, slack: float = 0.0) -> int:
    """Rows with k >= kmin whose gap exceeds bound(k) + slack."""
    ks, gaps = _gaps(trace_or_gaps)
    n = 0
    for k, g in zip(ks, gaps):
        if k >= kmin and not math.isnan(g) and g > bound(int(k)) + slack:
            n += 1
    return n


def fit_rate(
    trace_or_gaps,
    window: tuple,
    theory_slope: float = math.nan,
    bound: Optional[Callable[[int], float]] = None,
    floor: float = 0.0,
) -> RateReport:
    """Least-squares slope of log(gap) against log(k) inside ``window``.

    The window ends before the first gap at or below ``floor``.
    """
    ks, gaps = _gaps(trace_or_gaps)
    kmin, kmax = window
    sel = (ks >= max(kmin, 1)) & (ks <= kmax) & ~np.isnan(gaps)
    ks, gs = ks[sel], gaps[sel]
    bad = np.nonzero(gs <= floor)[0]
    if bad.size:
        ks, gs = ks[: bad[0]], gs[: bad[0]]
    if ks.size < 2:
        raise ArgumentError(f"rate window {window} holds fewer than two positive gaps")
    slope, intercept = np.polyfit(np.log(ks), np.log(gs), 1)
    violations = 0 if bound is None else count_violations(trace_or_gaps, bound)
    return RateReport(float(slope), float(theory_slope), violations, (int(ks[0]), int(ks[-1])), float(intercept), int(ks.size))
