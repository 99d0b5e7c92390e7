"""Polynomial symbols A(u) and the weight sequences they generate.

A symbol with coefficients (a_0, ..., a_K) produces the weights

    c_k(y) = sum_{j <= min(k,K)} a_j * y^(k-j) / [k-j]_q!

which are the Cauchy-product coefficients of A(u) * e_q(yu).  Nonnegative
coefficients with a_0 > 0 keep every weight nonnegative for y >= 0, which is
what makes the operator built on them positive.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationCapError
from .qcore import DEFAULT_TOL, SERIES_CAP, as_qvalue, q_integer

__all__ = [
    "AppellFamily",
    "FAMILIES",
    "family_by_name",
    "family_from_spec",
    "appell_weight",
    "weight_prefix",
    "family_functionals",
    "moment_sum",
]

FAMILIES = {
    "one": (1.0,),
    "affine": (1.0, 1.0),
    "quad": (1.0, 1.0, 0.5),
}


@dataclass(frozen=True)
class AppellFamily:
    coeffs: tuple
    name: str = "custom"

    def __post_init__(self) -> None:
        coeffs = tuple(float(a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) == 0:
            raise ValueError("symbol needs at least one coefficient")
        if coeffs[0] <= 0.0:
            raise ValueError(f"leading coefficient must be positive, got {coeffs[0]}")
        if any((not math.isfinite(a)) or a < 0.0 for a in coeffs):
            raise ValueError(f"coefficients must be finite and nonnegative: {coeffs}")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def family_by_name(name: str) -> AppellFamily:
    if name not in FAMILIES:
        raise KeyError(f"unknown family {name!r}; built-ins: {sorted(FAMILIES)}")
    return AppellFamily(FAMILIES[name], name=name)


def family_from_spec(spec: str) -> AppellFamily:
    """Accept a built-in name or an explicit list "a0,a1,..."."""
    if spec in FAMILIES:
        return family_by_name(spec)
    coeffs = tuple(float(part) for part in spec.split(","))
    return AppellFamily(coeffs, name=spec)


def appell_weight(family: AppellFamily, k: int, y: float, q) -> float:
    """Single weight c_k(y); one convolution pass over the symbol."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if y < 0.0:
        raise ValueError("y must be nonnegative")
    qv = as_qvalue(q)
    # running y^j/[j]_q!, built by recurrence to dodge overflow of y^j alone
    pow_over_fact = [1.0]
    for j in range(1, k + 1):
        pow_over_fact.append(pow_over_fact[-1] * y / q_integer(j, qv))
    out = 0.0
    for j, a in enumerate(family.coeffs):
        if j <= k:
            out += a * pow_over_fact[k - j]
    return out


Functionals = namedtuple("Functionals", "A1 DqA1 DqAq Dq2A1")


def family_functionals(family: AppellFamily, q) -> Functionals:
    """The four scalars every moment formula consumes.

    A1 = A(1); DqA1 and DqAq are the termwise q-derivative of A at u = 1 and
    u = q; Dq2A1 applies the termwise q-derivative twice, at u = 1.
    """
    qv = as_qvalue(q)
    a1 = sum(family.coeffs)
    d1 = sum(a * q_integer(k, qv) for k, a in enumerate(family.coeffs))
    dq = sum(
        a * q_integer(k, qv) * qv.q ** (k - 1)
        for k, a in enumerate(family.coeffs)
        if k >= 1
    )
    d2 = sum(
        a * q_integer(k, qv) * q_integer(k - 1, qv)
        for k, a in enumerate(family.coeffs)
        if k >= 2
    )
    return Functionals(float(a1), float(d1), float(dq), float(d2))


def weight_prefix(family: AppellFamily, y: float, q, count: int) -> np.ndarray:
    """Array of c_0(y) .. c_{count-1}(y)."""
    qv = as_qvalue(q)
    t = np.empty(count)
    t[0] = 1.0
    for j in range(1, count):
        t[j] = t[j - 1] * y / q_integer(j, qv)
    c = np.zeros(count)
    for j, a in enumerate(family.coeffs):
        if j < count:
            c[j:] += a * t[: count - j]
    return c

# The tail of sum_k c_k(y) [k]_q^p after index k is geometric: every ratio
# c_{k+1}/c_k is a weighted mean of component ratios y/[k+1-m]_q (m over the
# symbol), all bounded by R = y/[k+1-K]_q, and R decreases in k toward
# (1-q)y < 1 on the evaluation domain.  Using max(R, safety) keeps the bound
# conservative; the [k]^p factor is absorbed by [k]_q < 1/(1-q).
_SAFETY = 0.95


def moment_sum(
    family: AppellFamily,
    y: float,
    q,
    power: int,
    tol: float = DEFAULT_TOL,
    k_min: int = 16,
    k_max: int = SERIES_CAP,
) -> float:
    """sum_k c_k(y) * [k]_q^power, truncated by the geometric tail bound."""
    if power < 0:
        raise ValueError("power must be nonnegative")
    if y < 0.0:
        raise ValueError("y must be nonnegative")
    qv = as_qvalue(q)
    deg = family.degree
    pow_bound = qv.radius**power  # [k]_q never exceeds the radius
    window = [0.0] * deg + [1.0]  # trailing values of y^j/[j]_q!
    total = 0.0
    qpow = 1.0  # q^k
    qint_k = 0.0
    for k in range(k_max + 1):
        c_k = 0.0
        for j, a in enumerate(family.coeffs):
            c_k += a * window[deg - j]
        total += c_k * qint_k**power
        lag = k + 1 - deg
        if lag >= 1 and k >= k_min:
            ratio = y / q_integer(lag, qv)
            rho = max(ratio, _SAFETY)
            if rho < 1.0 and c_k * rho / (1.0 - rho) * pow_bound <= tol * max(1.0, total):
                return total
        qpow *= qv.q
        qint_next = (1.0 - qpow) / (1.0 - qv.q)
        window = window[1:] + [window[-1] * y / qint_next]
        qint_k = qint_next
    raise TruncationCapError(
        f"moment_sum(power={power}, y={y}, q={qv.q}) hit the {k_max}-term cap"
    )
