"""Equidistribution diagnostics on the unit circle.

Counting functions for intervals (with wraparound), the exact sorted
formula for one-dimensional star discrepancy, a scan for persistently
overrepresented intervals, and the quadratic-form ceiling that caps
the pair statistic of a sequence leaving an initial arc underfilled:
if at most mass*n of the first n points lie in [0, cut), and the shift
gamma sits beyond the deficient arc, then

    F(gamma, s, n) <= (2s+1) * theta,   theta = (mass/cut) * (2 - mass/cut) < 1,

asymptotically.  Since (2s+1)*theta < 2s for large s, such a sequence
cannot have Poissonian pair correlations with shift gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corestats import pair_count_fast


def load_points(path) -> np.ndarray:
    """Point list from a text file, one real in [0, 1) per line."""
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                v = float(text)
            except ValueError:
                raise ValueError(f"line {lineno}: not a real number: {text!r}")
            if not 0.0 <= v < 1.0:
                raise ValueError(f"line {lineno}: point {v} outside [0, 1)")
            values.append(v)
    return np.array(values, dtype=np.float64)


def rotate_points(points, rho: float) -> np.ndarray:
    """(x + rho) mod 1; pair statistics are invariant under this."""
    v = np.mod(np.asarray(points, dtype=np.float64) + rho, 1.0)
    v[v == 1.0] = 0.0
    return v


def interval_count(points, interval) -> tuple:
    """Exact count and normalized share of points in [left, right).

    left > right wraps around the seam; (0, 1) is the full circle;
    left == right counts nothing.
    """
    left, right = float(interval[0]), float(interval[1])
    if not (0.0 <= left <= 1.0 and 0.0 <= right <= 1.0):
        raise ValueError("interval endpoints must lie in [0, 1]")
    x = np.asarray(points, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty sequence")
    if left <= right:
        count = int(np.count_nonzero((x >= left) & (x < right)))
    else:
        count = int(np.count_nonzero((x >= left) | (x < right)))
    return count, count / n


def star_discrepancy(points) -> float:
    """D*_n by the exact order-statistic formula:
    max_i max(i/n - x_(i), x_(i) - (i-1)/n).  Always >= 1/(2n)."""
    x = np.sort(np.asarray(points, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ValueError("empty sequence")
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(np.max(np.maximum(i / n - x, x - (i - 1) / n)))


@dataclass
class OverrepReport:
    interval: tuple          # (left, right) of the best interval
    deviation: float         # max over checkpoints of A_n(I) - leb(I)
    table: list              # (left, right, deviation) per partition cell


def overrep_search(points, k_partition: int, checkpoints) -> OverrepReport:
    """Scan the k+1 equal cells of a circle partition across prefix
    checkpoints and return the cell with the largest excess of its
    empirical share over its length."""
    if k_partition < 2:
        raise ValueError("k_partition must be >= 2")
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise ValueError("need at least one checkpoint")
    x = np.asarray(points, dtype=np.float64)
    if x.size < max(checkpoints):
        raise ValueError("points shorter than the largest checkpoint")
    cells = k_partition + 1
    edges = [(k / cells, (k + 1) / cells) for k in range(cells)]
    best = None
    table = []
    for left, right in edges:
        dev = -math.inf
        for n in checkpoints:
            _, share = interval_count(x[:n], (left, right))
            dev = max(dev, share - (right - left))
        table.append((left, right, dev))
        if best is None or dev > best[2]:
            best = (left, right, dev)
    return OverrepReport(interval=(best[0], best[1]), deviation=best[2], table=table)


# ---------------------------------------------------------------------------
# the deficiency ceiling


@dataclass
class NonequidistParams:
    """Deficiency parameters: at most mass*n of the first n points lie
    in the arc [0, cut), and the shift gamma lies beyond that arc
    (gamma > 1 - cut).

    ``strict_geometry`` additionally demands 1 - cut < min(gamma,
    1-gamma), the distance-to-zero form under which the asymptotic
    ceiling is airtight; the plain value form is kept as the
    constructor requirement so that near-seam shifts can be probed,
    with the flag reported alongside.
    """

    cut: float
    mass: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.mass < self.cut < 1.0:
            raise ValueError("need 0 < mass < cut < 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not self.gamma > 1.0 - self.cut:
            raise ValueError("gamma must exceed 1 - cut")

    @property
    def theta(self) -> float:
        r = self.mass / self.cut
        return r * (2.0 - r)

    @property
    def strict_geometry(self) -> bool:
        return 1.0 - self.cut < min(self.gamma, 1.0 - self.gamma)


@dataclass
class PpcBound:
    theta: float
    asymptotic: float        # (2s+1) * theta
    finite: float            # the finite-n form at the extremal split


def window_quadratic_form(x_counts, shift: int, s: int) -> int:
    """sum_i X_i * sum_{|j|<=s} X_{(i+shift+j) mod n} for an integer
    occupancy vector; the bin-level majorant of n*F."""
    x = list(x_counts)
    n = len(x)
    total = 0
    for i in range(n):
        w = 0
        for j in range(-s, s + 1):
            w += x[(i + shift + j) % n]
        total += x[i] * w
    return total


def gamma_ppc_upper_bound(params: NonequidistParams, s: int, n: int) -> PpcBound:
    """Ceiling for F(gamma, s, n) under the deficiency constraint.

    Returns theta, the asymptotic value (2s+1)*theta, and the finite-n
    evaluation of the split occupancy (mass*n spread over the first
    floor(n*cut) bins, the rest over the remainder).
    """
    if s < 1 or int(s) != s:
        raise ValueError("s must be an integer >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 1.0 - params.cut < params.gamma - s / n:
        raise ValueError("gamma too close to the deficient arc")
    a = math.floor(n * params.cut)
    if a < 1 or a >= n:
        raise ValueError("n too small for the cut")
    low = n * params.mass / a
    high = n * (1.0 - params.mass) / (n - a)
    finite_nf = (
        low * high * 2.0 * (2 * s + 1) * (n - a)
        + low * low * (2 * s + 1) * (n - 2 * (n - a))
    )
    theta = params.theta
    return PpcBound(theta=theta, asymptotic=(2 * s + 1) * theta, finite=finite_nf / n)


@dataclass
class FailureCell:
    s: int
    n: int
    f_value: float
    bound: float
    passed: bool


@dataclass
class FailureReport:
    params: NonequidistParams
    qualifying: list
    cells: list
    certificate: bool            # (2*s_max+1)*theta < 2*s_max
    certificate_lhs: float
    certificate_rhs: float
    strict_geometry: bool
    bound_respected: bool = field(init=False)

    def __post_init__(self):
        self.bound_respected = all(c.passed for c in self.cells)


def verify_ppc_failure(points, checkpoints, params: NonequidistParams,
                       s_list) -> FailureReport:
    """Check F(gamma, s, n) <= (2s+1)*theta*(1 + 5/sqrt(n)) at every
    checkpoint where the deficiency actually holds, and report whether
    the ceiling excludes convergence to 2s for the largest s.

    The deficiency is verified, not assumed; checkpoints that fail
    A_n([0, cut)) <= mass are skipped.
    """
    s_list = sorted(int(s) for s in s_list)
    if not s_list or s_list[0] < 1:
        raise ValueError("s_list must hold integers >= 1")
    checkpoints = sorted(set(int(n) for n in checkpoints))
    x = np.asarray(points, dtype=np.float64)
    if x.size < checkpoints[-1]:
        raise ValueError("points shorter than the largest checkpoint")

    qualifying = []
    for n in checkpoints:
        _, share = interval_count(x[:n], (0.0, params.cut))
        if share <= params.mass:
            qualifying.append(n)
    if not qualifying:
        raise ValueError("no qualifying checkpoint found")

    theta = params.theta
    cells = []
    for n in qualifying:
        slack = 5.0 / math.sqrt(n)
        for s in s_list:
            f = pair_count_fast(x[:n], params.gamma, float(s)) / n
            cap = (2 * s + 1) * theta * (1.0 + slack)
            cells.append(FailureCell(s=s, n=n, f_value=f, bound=cap,
                                     passed=f <= cap))
    s_max = s_list[-1]
    lhs = (2 * s_max + 1) * theta
    rhs = 2.0 * s_max
    return FailureReport(
        params=params,
        qualifying=qualifying,
        cells=cells,
        certificate=lhs < rhs,
        certificate_lhs=lhs,
        certificate_rhs=rhs,
        strict_geometry=params.strict_geometry,
    )
