"""Exact phase-1 simplex over the rationals.

Decides feasibility of ``A x = b, x >= 0`` with Bland's anticycling rule.
On infeasibility the optimal phase-1 duals give a Farkas vector ``y`` with
``y @ A <= 0`` columnwise and ``y @ b > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def _exact(v) -> Fraction:
    # int() first: numpy integers inside a Fraction overflow silently.
    q = Fraction(v)
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass(frozen=True)
class PhaseOneResult:
    feasible: bool
    x: Optional[tuple[Fraction, ...]]
    farkas: Optional[tuple[Fraction, ...]]
    pivots: int


def phase_one(A: Sequence[Sequence], b: Sequence, max_pivots: int = 100_000) -> PhaseOneResult:
    m = len(A)
    n = len(A[0]) if m else 0
    rows = []
    rhs = []
    flipped = []
    for i in range(m):
        row = [_exact(v) for v in A[i]]
        bi = _exact(b[i])
        # artificials need b >= 0
        if bi < 0:
            row = [-v for v in row]
            bi = -bi
            flipped.append(True)
        else:
            flipped.append(False)
        art = [ZERO] * m
        art[i] = ONE
        rows.append(row + art)
        rhs.append(bi)
    width = n + m
    basis = list(range(n, n + m))
    # reduced costs for minimizing the sum of artificials
    cost = [ZERO] * width
    for j in range(n):
        cost[j] = -sum(rows[i][j] for i in range(m))

    pivots = 0
    while True:
        entering = next((j for j in range(width) if cost[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            coeff = rows[i][entering]
            if coeff > 0:
                ratio = rhs[i] / coeff
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            # unbounded is impossible for phase 1 (objective >= 0)
            raise RuntimeError("phase-1 objective unbounded")
        r = best[1]
        _pivot(rows, rhs, cost, r, entering, width)
        basis[r] = entering
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("pivot limit exceeded")

    objective = sum(rhs[i] for i in range(m) if basis[i] >= n)
    # duals of the (possibly sign-flipped) rows: y_i = c_art - reduced cost of artificial i
    y = [ONE - cost[n + i] for i in range(m)]
    y = [-v if flipped[i] else v for i, v in enumerate(y)]
    if objective == 0:
        x = [ZERO] * n
        for i, j in enumerate(basis):
            if j < n:
                x[j] = rhs[i]
        return PhaseOneResult(True, tuple(x), None, pivots)
    return PhaseOneResult(False, None, tuple(y), pivots)


def _pivot(rows, rhs, cost, r, c, width):
    prow = rows[r]
    p = prow[c]
    if p != 1:
        prow = [v / p for v in prow]
        rows[r] = prow
        rhs[r] = rhs[r] / p
    nz = [j for j in range(width) if prow[j] != 0]
    for i, row in enumerate(rows):
        if i == r:
            continue
        f = row[c]
        if f != 0:
            for j in nz:
                row[j] -= f * prow[j]
            rhs[i] -= f * rhs[r]
    f = cost[c]
    if f != 0:
        for j in nz:
            cost[j] -= f * prow[j]
