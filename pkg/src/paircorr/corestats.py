"""Exact pair counting, difference profiles and additive energy.

The central statistic is, for points x_1..x_n in [0,1), a shift gamma
and a scale s > 0,

    F = (1/n) * #{(i, j) : i != j, circdist(x_i - x_j, gamma) <= s/n}

counting ordered pairs, with an inclusive window boundary.  Two
implementations are provided: a direct all-pairs evaluation
(``pair_count_naive``, the reference) and a sort-and-search version
(``pair_count_fast``).  Both evaluate the identical float predicate,
so their integer counts agree exactly on every input.

The combinatorial side deals with integer sequences: the profile
r(d) = #{(a, b) : a - b = d} over a prefix of length n satisfies
sum_d r(d) = n**2 and r(0) = n, and the additive energy
E = #{(a,b,c,d) : a+b = c+d} equals sum_d r(d)**2.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .torus import (
    MAX_EXACT_FLOAT_INT,
    circ_dist_vec,
    frac_multiple_exact,
    frac_multiple_rational,
    frac_product_compensated,
    shift_mod1,
    wrap_unit,
)

# 62-bit prime for the certified big-int path.  Deliberately far from any
# power of two (a prime like 2**62 - 57 maps high powers of 2 to sparse
# small residues and floods the verification step with collisions), and
# the order of 2 modulo it exceeds 9e17.
_HASH_PRIME = 3702836479295970361
_NAIVE_BLOCK_CELLS = 4_000_000       # matrix cells per block in the naive path
_FAST_FLAT_CELLS = 8_000_000         # candidate cells per chunk in the fast path
_WINDOW_EPS_CUTOFF = 0.4999999       # above this, windows nearly cover the circle
_WINDOW_MARGIN = 1e-12               # absorbs rounding of the bisection bounds


class SequenceError(ValueError):
    """Raised for malformed integer sequences."""


class IntegerSequence:
    """Strictly increasing sequence of positive integers.

    Elements are Python ints, so arbitrary magnitudes are supported.
    ``prefix(n)`` returns the n smallest elements.
    """

    __slots__ = ("elements",)

    def __init__(self, elements, validate: bool = True):
        elems = [int(e) for e in elements]
        if validate:
            prev = 0
            for k, e in enumerate(elems):
                if e <= prev:
                    raise SequenceError(
                        f"element {k}: {e} is not strictly increasing and positive"
                    )
                prev = e
        self.elements = elems

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, IntegerSequence) and self.elements == other.elements

    def prefix(self, n: int) -> list:
        if n < 0 or n > len(self.elements):
            raise SequenceError(
                f"prefix too short: requested {n} of {len(self.elements)} elements"
            )
        return self.elements[:n]

    @property
    def max_element(self) -> int:
        return self.elements[-1] if self.elements else 0

    @classmethod
    def from_file(cls, path) -> "IntegerSequence":
        elems = []
        prev = 0
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text:
                    continue
                try:
                    value = int(text)
                except ValueError:
                    raise SequenceError(f"line {lineno}: not a decimal integer: {text!r}")
                if value <= prev:
                    raise SequenceError(
                        f"line {lineno}: {value} breaks strict monotonicity"
                    )
                prev = value
                elems.append(value)
        return cls(elems, validate=False)

    def to_file(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for e in self.elements:
                fh.write(f"{e}\n")


def _prefix_elements(seq, n: int) -> list:
    if isinstance(seq, IntegerSequence):
        return seq.prefix(n)
    elems = list(seq)
    if n > len(elems):
        raise SequenceError(
            f"prefix too short: requested {n} of {len(elems)} elements"
        )
    return [int(e) for e in elems[:n]]


# ---------------------------------------------------------------------------
# dilation


def dilate(seq, n: int, alpha: float) -> np.ndarray:
    """First n elements a_i mapped to a_i * alpha mod 1.

    The reduction is exact to within 2**-52: a compensated product for
    elements up to 2**53, exact dyadic big-integer arithmetic beyond.
    """
    elements = _prefix_elements(seq, n)
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        alpha = wrap_unit(alpha)
    if not elements:
        return np.empty(0, dtype=np.float64)
    if elements[-1] <= MAX_EXACT_FLOAT_INT:
        a = np.array(elements, dtype=np.float64)
        return frac_product_compensated(a, alpha)
    num, den = alpha.as_integer_ratio()
    out = np.empty(len(elements), dtype=np.float64)
    for i, e in enumerate(elements):
        out[i] = ((e * num) % den) / den
    out[out == 1.0] = 0.0
    return out


def dilate_rational(seq, n: int, num: int, bits: int) -> np.ndarray:
    """Dilation by the exact rational alpha = num / 2**bits."""
    elements = _prefix_elements(seq, n)
    mask = (1 << bits) - 1
    den = 1 << bits
    out = np.empty(len(elements), dtype=np.float64)
    for i, e in enumerate(elements):
        out[i] = ((e * num) & mask) / den
    out[out == 1.0] = 0.0
    return out


# ---------------------------------------------------------------------------
# pair counting


def _validate_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("points must be one-dimensional")
    if x.size == 0:
        raise ValueError("empty sequence")
    if x.size and (x.min() < 0.0 or x.max() >= 1.0):
        raise ValueError("points must lie in [0, 1)")
    return x


def _count_all_pairs_matrix(x: np.ndarray, y: np.ndarray, eps: float) -> int:
    n = x.size
    block = max(1, _NAIVE_BLOCK_CELLS // n)
    total = 0
    for i0 in range(0, n, block):
        d = np.abs(x[i0:i0 + block, None] - y[None, :])
        circ = np.minimum(d, 1.0 - d)
        total += int(np.count_nonzero(circ <= eps))
    return total


def pair_count_naive(points, gamma: float, s: float) -> int:
    """Reference count of ordered pairs i != j with the circular
    difference x_i - x_j within s/n of gamma (inclusive).

    Direct all-pairs evaluation; the oracle for ``pair_count_fast``.
    """
    x = _validate_points(points)
    if s <= 0.0:
        raise ValueError("s must be positive")
    n = x.size
    eps = s / n
    y = shift_mod1(x, wrap_unit(float(gamma)))
    total = _count_all_pairs_matrix(x, y, eps)
    self_matches = int(np.count_nonzero(circ_dist_vec(x, y) <= eps))
    return total - self_matches


def pair_count_fast(points, gamma: float, s: float) -> int:
    """Same count as ``pair_count_naive`` on every input, via sorting
    the shifted points and searching each circular window.

    O(n log n + matches).  Bisection bounds are widened by a small
    margin and every candidate is re-tested with the exact predicate,
    so the result is bit-identical to the naive count.
    """
    x = _validate_points(points)
    if s <= 0.0:
        raise ValueError("s must be positive")
    n = x.size
    eps = s / n
    if eps >= 0.5:
        # the window covers the whole circle: every ordered pair counts
        return n * (n - 1)
    y = shift_mod1(x, wrap_unit(float(gamma)))
    self_matches = int(np.count_nonzero(circ_dist_vec(x, y) <= eps))
    if eps > _WINDOW_EPS_CUTOFF:
        return _count_all_pairs_matrix(x, y, eps) - self_matches

    ys = np.sort(y)
    ext = np.concatenate([ys, ys + 1.0, ys + 2.0])
    xq = x + 1.0
    half = eps + _WINDOW_MARGIN
    lo = np.searchsorted(ext, xq - half, side="left")
    hi = np.searchsorted(ext, xq + half, side="right")
    lens = hi - lo
    if int(lens.sum()) > n * n // 4:
        # dense windows: the flat gather costs more than the plain matrix
        return _count_all_pairs_matrix(x, y, eps) - self_matches
    bounds = np.cumsum(lens)
    total = 0
    start_row = 0
    while start_row < n:
        done = bounds[start_row - 1] if start_row else 0
        stop_row = int(np.searchsorted(bounds, done + _FAST_FLAT_CELLS, side="left"))
        stop_row = max(start_row + 1, min(n, stop_row + 1))
        rows = slice(start_row, stop_row)
        chunk_lens = lens[rows]
        m = int(chunk_lens.sum())
        if m:
            starts = np.repeat(lo[rows], chunk_lens)
            offs = np.arange(m) - np.repeat(
                np.cumsum(chunk_lens) - chunk_lens, chunk_lens
            )
            kk = starts + offs
            yv = ys[kk % n]
            xv = np.repeat(x[rows], chunk_lens)
            total += int(np.count_nonzero(circ_dist_vec(xv, yv) <= eps))
        start_row = stop_row
    return total - self_matches


def pair_corr_naive(points, gamma: float, s: float) -> float:
    """F statistic via the reference count: pair_count_naive / n."""
    x = _validate_points(points)
    return pair_count_naive(x, gamma, s) / x.size


def pair_corr_fast(points, gamma: float, s: float) -> float:
    """F statistic via the fast count; equals pair_corr_naive exactly."""
    x = _validate_points(points)
    return pair_count_fast(x, gamma, s) / x.size


# ---------------------------------------------------------------------------
# difference profiles and additive energy


@dataclass
class RepresentationProfile:
    """Sparse map d -> r(d) over a length-n prefix.

    Invariants: sum of counts is n**2, counts[0] == n, and
    counts[d] == counts[-d].
    """

    counts: dict
    n: int

    def support_size(self) -> int:
        return len(self.counts)

    def max_nonzero_count(self) -> int:
        return max((r for d, r in self.counts.items() if d != 0), default=0)

    def energy(self) -> int:
        return sum(r * r for r in self.counts.values())

    def check_invariants(self) -> None:
        total = sum(self.counts.values())
        if total != self.n * self.n:
            raise AssertionError(f"sum r(d) = {total} != n^2 = {self.n ** 2}")
        if self.counts.get(0, 0) != self.n:
            raise AssertionError("r(0) != n")
        for d, r in self.counts.items():
            if self.counts.get(-d, 0) != r:
                raise AssertionError(f"r({d}) != r({-d})")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["d", "r"])
            for d in sorted(self.counts):
                writer.writerow([d, self.counts[d]])


def repr_profile(seq, n: int) -> RepresentationProfile:
    """Profile of ordered differences of the length-n prefix.

    Materialises the full sparse map; intended for moderate n (the
    map can hold up to n**2 entries).
    """
    if n < 1:
        raise SequenceError("prefix too short: need n >= 1")
    elements = _prefix_elements(seq, n)
    if elements[-1] < (1 << 62):
        a = np.array(elements, dtype=np.int64)
        diffs = (a[:, None] - a[None, :]).ravel()
        uniq, cnt = np.unique(diffs, return_counts=True)
        counts = dict(zip(uniq.tolist(), cnt.tolist()))
    else:
        counts = Counter()
        for ai in elements:
            for aj in elements:
                counts[ai - aj] += 1
        counts = dict(counts)
    return RepresentationProfile(counts=counts, n=n)


def _energy_int64(elements: list) -> int:
    a = np.array(elements, dtype=np.int64)
    n = a.size
    spread = int(a[-1]) - int(a[0])
    nbins = 2 * spread + 1
    if nbins <= 8_000_000:
        acc = np.zeros(nbins, dtype=np.int64)
        block = max(1, _NAIVE_BLOCK_CELLS // n)
        for i0 in range(0, n, block):
            d = (a[i0:i0 + block, None] - a[None, :]).ravel() + spread
            acc += np.bincount(d, minlength=nbins)
        return int(np.dot(acc, acc))
    diffs = (a[:, None] - a[None, :]).ravel()
    diffs.sort()
    change = np.flatnonzero(np.diff(diffs)) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [diffs.size]])
    runs = ends - starts
    return int(np.dot(runs, runs))


def _energy_bigint(elements: list) -> int:
    """Exact energy for arbitrary-size integers.

    Differences are grouped by their residue mod 2**61 - 1; groups of
    size >= 2 are re-verified with exact integer differences, so hash
    collisions merge nothing.
    """
    p = _HASH_PRIME
    n = len(elements)
    m = np.array([e % p for e in elements], dtype=np.int64)
    d = np.mod(m[:, None] - m[None, :], p).ravel()
    order = np.argsort(d, kind="stable")
    ds = d[order]
    del d
    change = np.flatnonzero(ds[1:] != ds[:-1]) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [ds.size]])
    runs = ends - starts
    energy = int(np.count_nonzero(runs == 1))
    for k in np.flatnonzero(runs >= 2).tolist():
        # residue shared by >= 2 pairs: re-group by exact difference
        true_counts = Counter()
        for flat in order[starts[k]:ends[k]].tolist():
            i, j = divmod(flat, n)
            true_counts[elements[i] - elements[j]] += 1
        energy += sum(c * c for c in true_counts.values())
    return energy


def additive_energy(seq, n: int) -> int:
    """Number of quadruples (a, b, c, d) in the prefix with a+b = c+d.

    Computed as the sum of squared difference counts; exact Python
    integers throughout, so no overflow at any scale.
    """
    if n < 1:
        raise SequenceError("prefix too short: need n >= 1")
    elements = _prefix_elements(seq, n)
    if abs(elements[-1]) < (1 << 62) and abs(elements[0]) < (1 << 62):
        return _energy_int64(elements)
    return _energy_bigint(elements)


# ---------------------------------------------------------------------------
# closed-form moments


def f_expectation(s: float, n: int) -> float:
    """Mean of F over uniformly random (alpha, gamma): 2*s*(n-1)/n.

    Valid while the window 2s/n fits inside the circle.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if s <= 0.0:
        raise ValueError("s must be positive")
    if 2.0 * s / n > 1.0:
        raise ValueError("formula out of range: need 2s <= n")
    return 2.0 * s * (n - 1) / n


def variance_bound(energy: int, n: int, s: float) -> float:
    """Upper bound 2*E*s/n**3 for the variance of F over the torus."""
    if n < 1:
        raise ValueError("need n >= 1")
    if energy < 0:
        raise ValueError("energy must be nonnegative")
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    return 2.0 * energy * s / (n * n * n)


# ---------------------------------------------------------------------------
# correlation tables


@dataclass
class CorrelationResult:
    """F values for one (alpha, gamma) over a grid of s and prefix sizes."""

    alpha: float
    gamma: float
    entries: list = field(default_factory=list)  # rows (s, n, count, f)

    def add(self, s: float, n: int, count: int) -> None:
        self.entries.append((s, n, count, count / n))


def correlation_table(seq, alpha: float, gamma: float, s_grid, n_schedule) -> CorrelationResult:
    """Evaluate F on every (s, n) cell for a single dilation pair."""
    n_schedule = list(n_schedule)
    if sorted(n_schedule) != n_schedule or len(set(n_schedule)) != len(n_schedule):
        raise ValueError("n_schedule must be strictly increasing")
    result = CorrelationResult(alpha=alpha, gamma=gamma)
    points_all = dilate(seq, n_schedule[-1], alpha)
    for n in n_schedule:
        pts = points_all[:n]
        for s in s_grid:
            result.add(s, n, pair_count_fast(pts, gamma, s))
    return result
