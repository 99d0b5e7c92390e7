"""Natural density, statistical limits, and weighted convergence curves.

The experiment schedules pair a parameter sequence q_n with a stretch
sequence b_n = n^(1/4).  The smooth schedule (q_n = 1 - 1/sqrt(n)) satisfies
every hypothesis of the weighted convergence theorem in the ordinary sense;
the spiky schedule drops q_n to 1/2 on the perfect squares, killing the
ordinary limit while leaving the statistical limit at 1, since the squares
have natural density zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import GridSpec
from .appell import AppellFamily
from .errors import DomainError
from .operators import SAFETY, make_operator, moment_closed
from .qcore import q_integer

__all__ = [
    "is_perfect_square",
    "ScheduleSpec",
    "WeightedNorm",
    "natural_density",
    "st_limit_verify",
    "clip_grid_for",
    "korovkin_curve",
    "korovkin_table",
]


def is_perfect_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("smooth", "spiky"):
            raise ValueError(f"schedule kind must be smooth or spiky, got {self.kind!r}")

    def q_at(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"index must be >= 1, got {n}")
        if self.kind == "spiky" and is_perfect_square(n):
            return 0.5
        return 1.0 - n**-0.5

    def b_at(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"index must be >= 1, got {n}")
        return n**0.25


@dataclass(frozen=True)
class WeightedNorm:
    """Grid sup of |f(x)| / (1 + x^2)."""

    grid: GridSpec

    def weights(self) -> np.ndarray:
        return 1.0 + self.grid.xs() ** 2

    def of_values(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.grid.points,):
            raise ValueError(
                f"expected {self.grid.points} values, got shape {values.shape}"
            )
        return float(np.max(np.abs(values) / self.weights()))

    def of_function(self, f) -> float:
        xs = self.grid.xs()
        return self.of_values([float(f(x)) for x in xs])


def natural_density(predicate, N: int) -> float:
    """|{k <= N : predicate(k)}| / N."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    count = sum(1 for k in range(1, N + 1) if predicate(k))
    return count / N


def st_limit_verify(seq, L: float, eps: float, N: int) -> float:
    """Density of the eps-exceptional index set {k <= N : |seq(k) - L| >= eps}."""
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    return natural_density(lambda k: abs(float(seq(k)) - L) >= eps, N)


def clip_grid_for(schedule: ScheduleSpec, ns, grid: GridSpec) -> GridSpec:
    """Shrink the grid so every instance along ns can evaluate on it."""
    hi = grid.x_hi
    for n in ns:
        q = schedule.q_at(n)
        bn = schedule.b_at(n)
        nq = q_integer(n, q)
        hi = min(hi, SAFETY * bn / ((1.0 - q) * nq))
    if hi <= grid.x_lo:
        raise DomainError(
            f"guarded domain [0, {hi}] leaves no room above x_lo={grid.x_lo}"
        )
    if hi >= grid.x_hi:
        return grid
    return GridSpec(grid.x_lo, hi, grid.points)


def korovkin_curve(
    schedule: ScheduleSpec,
    family: AppellFamily,
    v: int,
    ns,
    grid: GridSpec,
) -> list:
    """[(n, weighted error of the v-th monomial moment)] along the schedule."""
    if v not in (0, 1, 2):
        raise ValueError(f"monomial order must be 0, 1 or 2, got {v}")
    eff = clip_grid_for(schedule, ns, grid)
    norm = WeightedNorm(eff)
    out = []
    for n in ns:
        op = make_operator(n, schedule.q_at(n), schedule.b_at(n), family)
        xs = eff.xs()
        errs = [moment_closed(op, v, float(x)) - float(x) ** v for x in xs]
        out.append((n, norm.of_values(errs)))
    return out


def korovkin_table(
    schedule: ScheduleSpec,
    family: AppellFamily,
    ns,
    grid: GridSpec,
) -> list:
    """Rows (n, q_n, b_n, b_n/[n]_q, err_v0, err_v1, err_v2) for CSV emission."""
    curves = [dict(korovkin_curve(schedule, family, v, ns, grid)) for v in (0, 1, 2)]
    rows = []
    for n in ns:
        q = schedule.q_at(n)
        bn = schedule.b_at(n)
        rows.append(
            (
                n,
                q,
                bn,
                bn / q_integer(n, q),
                curves[0][n],
                curves[1][n],
                curves[2][n],
            )
        )
    return rows
