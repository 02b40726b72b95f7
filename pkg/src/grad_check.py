"""Finite-difference checks of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import ShapeError, Tape, Tensor

# Denominator floor for relative error, keeps near-zero gradients comparable
REL_ERROR_FLOOR = 1e-6


@dataclass
class GradCheckRow:
    """One compared coordinate."""

    group: str
    coordinate: tuple[int, ...]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    """Result of comparing analytic and central-difference gradients."""

    tolerance: float
    rows: list[GradCheckRow] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((r.rel_error for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_table(self) -> str:
        """Plain-text table for test logs."""
        header = f"{'group':<28} {'coordinate':<14} {'analytic':>16} {'numeric':>16} {'rel-err':>10}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            coord = ",".join(str(c) for c in r.coordinate)
            lines.append(
                f"{r.group:<28} {coord:<14} {r.analytic:>16.9e} {r.numeric:>16.9e} {r.rel_error:>10.2e}"
            )
        lines.append(f"max rel-err {self.max_rel_error:.3e} (tol {self.tolerance:.1e}) -> {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_ERROR_FLOOR)


def _scalar(value: Tensor, what: str) -> float:
    if value.data.size != 1:
        raise ShapeError(f"grad_check({what})", value.shape, ())
    return value.item()


def grad_check(
    f: Callable[[Tensor], Tensor],
    point,
    step: float = 1e-5,
    tol: float = 1e-6,
) -> GradCheckReport:
    """Compare the tape gradient of scalar ``f`` at ``point`` with central differences."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    base = np.array(point, dtype=np.float64)

    tape = Tape()
    x = tape.leaf(base, name="x")
    out = f(x)
    _scalar(out, "f")
    if out.tape is None:
        analytic = np.zeros(base.shape)
    else:
        analytic = tape.backward(out)[x.node_id].data

    report = GradCheckReport(tolerance=tol)
    for coord in np.ndindex(base.shape):
        plus, minus = base.copy(), base.copy()
        plus[coord] += step
        minus[coord] -= step
        numeric = (_scalar(f(Tensor(plus)), "f") - _scalar(f(Tensor(minus)), "f")) / (2 * step)
        a = float(analytic[coord])
        report.rows.append(GradCheckRow("x", tuple(int(c) for c in coord), a, numeric, relative_error(a, numeric)))
    return report


def grad_check_parameters(
    loss_fn: Callable[[Mapping[str, Tensor]], Tensor],
    arrays: Mapping[str, np.ndarray],
    step: float = 1e-5,
    tol: float = 1e-4,
    per_group: int = 5,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Check every named parameter array on a sample of its coordinates.

    ``loss_fn`` receives name -> Tensor (taped leaves for the analytic pass,
    plain constants for the numeric passes) and must return a scalar.
    """
    rng = rng or np.random.default_rng(0)
    tape = Tape()
    leaves = {name: tape.leaf(value, name=name) for name, value in arrays.items()}
    loss = loss_fn(leaves)
    _scalar(loss, "loss_fn")
    analytic = tape.named_gradients(tape.backward(loss))

    constants = {name: Tensor(value) for name, value in arrays.items()}
    report = GradCheckReport(tolerance=tol)
    for name, value in arrays.items():
        flat_count = int(np.prod(value.shape))
        picks = rng.choice(flat_count, size=min(per_group, flat_count), replace=False)
        for flat in sorted(int(p) for p in picks):
            coord = np.unravel_index(flat, value.shape)
            shifted = {}
            for sign in (1.0, -1.0):
                perturbed = np.array(value, dtype=np.float64)
                perturbed[coord] += sign * step
                shifted[sign] = _scalar(loss_fn({**constants, name: Tensor(perturbed)}), "loss_fn")
            numeric = (shifted[1.0] - shifted[-1.0]) / (2 * step)
            a = float(analytic[name][coord])
            report.rows.append(
                GradCheckRow(name, tuple(int(c) for c in coord), a, numeric, relative_error(a, numeric))
            )
    return report
