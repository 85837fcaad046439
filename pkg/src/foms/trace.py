"""Per-iteration solver records and their CSV form."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .errors import ArgumentError, InternalFault

COLUMNS = ("k", "objective", "gap", "step", "grad_calls", "prox_calls", "lo_calls", "wall_ns")


@dataclass
class OracleCounter:
    grad: int = 0
    prox: int = 0
    lo: int = 0
    value: int = 0


@dataclass(frozen=True)
class TraceRow:
    k: int
    objective: float
    gap: Optional[float]
    step: float
    grad_calls: int
    prox_calls: int
    lo_calls: int
    wall_ns: int
    epoch: Optional[int] = None


def _same_float(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return a == b or (math.isnan(a) and math.isnan(b))


class SolverTrace:
    """Dense iteration log.

    Rows follow the fixed CSV schema; ``series`` holds optional per-iteration
    extras (merit values, A_k, value-oracle counts) that are not serialised.
    """

    def __init__(self, solver: str = "", meta: Optional[dict] = None):
        self.solver = solver
        self.meta = dict(meta or {})
        self.rows: list[TraceRow] = []
        self.series: dict[str, list] = {}
        self._t0 = time.perf_counter_ns()

    def record(self, k, objective, gap, step, counter: OracleCounter, epoch=None) -> TraceRow:
        if self.rows:
            last = self.rows[-1]
            if k <= last.k:
                raise InternalFault(f"trace index must increase: {k} after {last.k}")
            if (
                counter.grad < last.grad_calls
                or counter.prox < last.prox_calls
                or counter.lo < last.lo_calls
            ):
                raise InternalFault("oracle counters must be non-decreasing")
        row = TraceRow(
            k=int(k),
            objective=float(objective),
            gap=None if gap is None else float(gap),
            step=float(step),
            grad_calls=counter.grad,
            prox_calls=counter.prox,
            lo_calls=counter.lo,
            wall_ns=time.perf_counter_ns() - self._t0,
            epoch=epoch,
        )
        self.rows.append(row)
        return row

    def add(self, name: str, value) -> None:
        self.series.setdefault(name, []).append(value)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.rows]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    @property
    def last(self) -> TraceRow:
        return self.rows[-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SolverTrace) or len(self.rows) != len(other.rows):
            return False
        if self._header_meta() != other._header_meta():
            return False
        for a, b in zip(self.rows, other.rows):
            for f in fields(TraceRow):
                va, vb = getattr(a, f.name), getattr(b, f.name)
                if isinstance(va, float) or isinstance(vb, float):
                    if not _same_float(va, vb):
                        return False
                elif va != vb:
                    return False
        return True

    # -- persistence -------------------------------------------------------

    def _header_meta(self) -> dict:
        meta = {k: str(v) for k, v in self.meta.items()}
        if self.solver:
            meta.setdefault("solver", self.solver)
        return meta

    def to_csv(self, path_or_buf) -> None:
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            for key, val in self._header_meta().items():
                fh.write(f"# {key}: {val}\n")
            tagged = any(r.epoch is not None for r in self.rows)
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS + (("epoch",) if tagged else ()))
            for r in self.rows:
                row = [
                    r.k,
                    repr(r.objective),
                    "" if r.gap is None else repr(r.gap),
                    repr(r.step),
                    r.grad_calls,
                    r.prox_calls,
                    r.lo_calls,
                    r.wall_ns,
                ]
                if tagged:
                    row.append("" if r.epoch is None else r.epoch)
                writer.writerow(row)
        finally:
            if own:
                fh.close()

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path_or_buf) -> "SolverTrace":
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, newline="") if own else path_or_buf
        try:
            meta = {}
            lines = []
            for line in fh:
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition(":")
                    meta[key.strip()] = val.strip()
                elif line.strip():
                    lines.append(line)
        finally:
            if own:
                fh.close()
        reader = csv.reader(lines)
        header = tuple(next(reader, ()))
        if header[: len(COLUMNS)] != COLUMNS:
            raise ArgumentError(f"unexpected trace header {header}")
        tagged = len(header) > len(COLUMNS) and header[len(COLUMNS)] == "epoch"
        trace = cls(solver=meta.get("solver", ""), meta=meta)
        for rec in reader:
            trace.rows.append(
                TraceRow(
                    k=int(rec[0]),
                    objective=float(rec[1]),
                    gap=None if rec[2] == "" else float(rec[2]),
                    step=float(rec[3]),
                    grad_calls=int(rec[4]),
                    prox_calls=int(rec[5]),
                    lo_calls=int(rec[6]),
                    wall_ns=int(rec[7]),
                    epoch=(int(rec[8]) if tagged and rec[8] != "" else None),
                )
            )
        return trace
