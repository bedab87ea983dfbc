"""Seeded Monte Carlo experiments over pairs (alpha, gamma) in [0,1)^2.

The harness samples dilation/shift pairs, evaluates the pair statistic
F on a grid of window scales s and prefix sizes n, and compares the
sample moments against the closed forms: mean 2s(n-1)/n and variance
at most 2*E*s/n**3, where E is the additive energy of the prefix.

Reproducibility contract: sample i draws from a stream keyed by
(master_seed, i), and aggregation uses exact integer accumulators of
window counts, so reports are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .corestats import (
    IntegerSequence,
    additive_energy,
    dilate_rational,
    pair_count_fast,
    variance_bound,
)
from .rng import alpha_bits_for, alpha_to_float, draw_alpha, sample_stream
from .sequences import BlockConstruction
from .torus import circ_dist_vec, frac_product_compensated

MODES = ("dilated", "iid-random")


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass
class ExperimentConfig:
    master_seed: int
    samples: int
    s_grid: list
    n_schedule: list
    mode: str = "dilated"
    sequence: IntegerSequence | None = None
    sequence_label: str = ""
    retain_trajectories: bool = False

    def validate(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.s_grid or any(s <= 0 for s in self.s_grid):
            raise ValueError("s_grid must be nonempty and strictly positive")
        ns = list(self.n_schedule)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ValueError("n_schedule must be nonempty and strictly increasing")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "dilated":
            if self.sequence is None:
                raise ValueError("dilated mode needs a sequence")
            if len(self.sequence) < ns[-1]:
                raise ValueError(
                    f"sequence too short: {len(self.sequence)} < {ns[-1]}"
                )

    def echo(self) -> dict:
        """Semantic parameters only; execution details like worker count
        do not influence results and are not part of the echo."""
        return {
            "master_seed": self.master_seed,
            "samples": self.samples,
            "s_grid": list(self.s_grid),
            "n_schedule": list(self.n_schedule),
            "mode": self.mode,
            "sequence": self.sequence_label if self.mode == "dilated" else None,
        }


@dataclass
class McCell:
    s: float
    n: int
    sum_count: int
    sum_count_sq: int
    min_count: int
    max_count: int
    samples: int

    @property
    def mean(self) -> float:
        return self.sum_count / (self.samples * self.n)

    @property
    def variance(self) -> float:
        k = self.samples
        if k < 2:
            return 0.0
        num = k * self.sum_count_sq - self.sum_count * self.sum_count
        return num / (k * (k - 1) * self.n * self.n)

    @property
    def f_min(self) -> float:
        return self.min_count / self.n

    @property
    def f_max(self) -> float:
        return self.max_count / self.n

    @property
    def deviation(self) -> float:
        return abs(self.mean - 2.0 * self.s * (self.n - 1) / self.n)


@dataclass
class McReport:
    config: dict
    cells: list
    trajectories: list | None = None

    def cell(self, s: float, n: int) -> McCell:
        for c in self.cells:
            if c.s == s and c.n == n:
                return c
        raise KeyError((s, n))

    def to_dict(self) -> dict:
        rows = sorted(self.cells, key=lambda c: (c.s, c.n))
        return {
            "config": self.config,
            "cells": [
                {
                    "s": c.s,
                    "n": c.n,
                    "mean": c.mean,
                    "variance": c.variance,
                    "min": c.f_min,
                    "max": c.f_max,
                    "deviation": c.deviation,
                }
                for c in rows
            ],
        }


# ---------------------------------------------------------------------------
# the sampler


def _mc_chunk(config: ExperimentConfig, lo: int, hi: int):
    s_grid = list(config.s_grid)
    n_sched = list(config.n_schedule)
    ncells = len(n_sched) * len(s_grid)
    sum_c = [0] * ncells
    sum_c2 = [0] * ncells
    min_c = [None] * ncells
    max_c = [None] * ncells
    traj = [] if config.retain_trajectories else None

    max_n = n_sched[-1]
    if config.mode == "dilated":
        elements = config.sequence.prefix(max_n)
        bits = alpha_bits_for(elements[-1])

    for i in range(lo, hi):
        gen = sample_stream(config.master_seed, i)
        if config.mode == "dilated":
            num, _ = draw_alpha(gen, bits)
            gamma = float(gen.random())
            pts_all = dilate_rational(elements, max_n, num, bits)
        else:
            gamma = float(gen.random())
            pts_all = gen.random(max_n)

        row = [0] * ncells
        for ni, n in enumerate(n_sched):
            pts = pts_all[:n]
            for si, s in enumerate(s_grid):
                idx = ni * len(s_grid) + si
                c = pair_count_fast(pts, gamma, s)
                row[idx] = c
        for idx, c in enumerate(row):
            sum_c[idx] += c
            sum_c2[idx] += c * c
            if min_c[idx] is None or c < min_c[idx]:
                min_c[idx] = c
            if max_c[idx] is None or c > max_c[idx]:
                max_c[idx] = c
        if traj is not None:
            traj.append((i, row))
    return sum_c, sum_c2, min_c, max_c, traj


_FORK_STATE: dict = {}


def _mc_chunk_worker(span):
    return _mc_chunk(_FORK_STATE["config"], span[0], span[1])


def run_mc(config: ExperimentConfig, workers: int = 1) -> McReport:
    """Run the Monte Carlo grid; deterministic in config, independent of
    the worker count (exact integer merge of per-sample counts)."""
    config.validate()
    k = config.samples
    workers = max(1, int(workers))
    if workers == 1 or k < 2 * workers:
        parts = [_mc_chunk(config, 0, k)]
    else:
        bounds = [round(k * w / workers) for w in range(workers + 1)]
        spans = [
            (bounds[w], bounds[w + 1])
            for w in range(workers)
            if bounds[w] < bounds[w + 1]
        ]
        _FORK_STATE["config"] = config
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
                parts = list(ex.map(_mc_chunk_worker, spans))
        finally:
            _FORK_STATE.clear()

    s_grid = list(config.s_grid)
    n_sched = list(config.n_schedule)
    ncells = len(n_sched) * len(s_grid)
    sum_c = [0] * ncells
    sum_c2 = [0] * ncells
    min_c = [None] * ncells
    max_c = [None] * ncells
    traj = [] if config.retain_trajectories else None
    for p_sum, p_sum2, p_min, p_max, p_traj in parts:
        for idx in range(ncells):
            sum_c[idx] += p_sum[idx]
            sum_c2[idx] += p_sum2[idx]
            if p_min[idx] is not None:
                if min_c[idx] is None or p_min[idx] < min_c[idx]:
                    min_c[idx] = p_min[idx]
                if max_c[idx] is None or p_max[idx] > max_c[idx]:
                    max_c[idx] = p_max[idx]
        if traj is not None and p_traj:
            traj.extend(p_traj)
    if traj is not None:
        traj.sort(key=lambda t: t[0])

    cells = []
    for ni, n in enumerate(n_sched):
        for si, s in enumerate(s_grid):
            idx = ni * len(s_grid) + si
            cells.append(
                McCell(
                    s=s,
                    n=n,
                    sum_count=sum_c[idx],
                    sum_count_sq=sum_c2[idx],
                    min_count=min_c[idx],
                    max_count=max_c[idx],
                    samples=k,
                )
            )
    return McReport(config=config.echo(), cells=cells, trajectories=traj)


# ---------------------------------------------------------------------------
# moment checks


@dataclass
class CheckCell:
    s: float
    n: int
    observed: float
    target: float
    band: float
    passed: bool
    ratio: float = float("nan")


@dataclass
class CheckReport:
    kind: str
    cells: list
    config: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "passed": self.passed,
            "cells": [
                {
                    "s": c.s,
                    "n": c.n,
                    "observed": c.observed,
                    "target": c.target,
                    "band": c.band,
                    "ratio": c.ratio,
                    "passed": c.passed,
                }
                for c in sorted(self.cells, key=lambda c: (c.s, c.n))
            ],
        }


def _prefix_energies(config: ExperimentConfig) -> dict:
    return {n: additive_energy(config.sequence, n) for n in config.n_schedule}


def expectation_check(config: ExperimentConfig, workers: int = 1,
                      report: McReport | None = None) -> CheckReport:
    """Sample mean of F vs 2s(n-1)/n within four standard errors.

    The standard error comes from the proven variance bound: for the
    dilated mode 2*E(A_n)*s/n**3 with the exact prefix energy, for the
    iid mode the cruder 2s/n.
    """
    config.validate()
    if report is None:
        report = run_mc(config, workers=workers)
    energies = _prefix_energies(config) if config.mode == "dilated" else None
    cells = []
    for c in report.cells:
        target = 2.0 * c.s * (c.n - 1) / c.n
        if 2.0 * c.s / c.n > 1.0:
            raise ValueError("formula out of range: need 2s <= n in every cell")
        if config.mode == "dilated":
            var_cap = variance_bound(energies[c.n], c.n, c.s)
        else:
            var_cap = 2.0 * c.s / c.n
        band = 4.0 * math.sqrt(var_cap / config.samples)
        margin = abs(c.mean - target)
        cells.append(
            CheckCell(
                s=c.s, n=c.n, observed=c.mean, target=target, band=band,
                passed=margin <= band,
                ratio=margin / band if band > 0 else float("inf"),
            )
        )
    return CheckReport(kind="expectation", cells=cells, config=config.echo())


def variance_check(config: ExperimentConfig, workers: int = 1,
                   report: McReport | None = None) -> CheckReport:
    """Sample variance of F vs the bound 2*E(A_n)*s/n**3 (1 + 5/sqrt(K))."""
    config.validate()
    if config.mode != "dilated":
        raise ValueError("variance_check applies to the dilated mode")
    if report is None:
        report = run_mc(config, workers=workers)
    energies = _prefix_energies(config)
    slack = 5.0 / math.sqrt(config.samples)
    cells = []
    for c in report.cells:
        cap = variance_bound(energies[c.n], c.n, c.s) * (1.0 + slack)
        cells.append(
            CheckCell(
                s=c.s, n=c.n, observed=c.variance, target=cap, band=cap,
                passed=c.variance <= cap,
                ratio=c.variance / cap if cap > 0 else float("inf"),
            )
        )
    return CheckReport(kind="variance", cells=cells, config=config.echo())


# ---------------------------------------------------------------------------
# pairwise independence of the indicator family


@dataclass
class IndependenceReport:
    d1: int
    d2: int
    eps1: float
    eps2: float
    samples: int
    joint: float
    joint_target: float
    marginal1: float
    marginal2: float
    tolerance: float
    passed: bool


def indicator_independence_check(
    d1: int, d2: int, eps1: float, eps2: float, samples: int, seed: int
) -> IndependenceReport:
    """Empirical E[1_{d1,eps1} * 1_{d2,eps2}] against the product law.

    The indicator 1_{d,eps} tests dist(d*alpha - gamma) <= eps on the
    unit torus; for d1 != d2 the pair is independent, so the joint
    frequency approaches 4*eps1*eps2 and each marginal approaches
    2*eps.  All three are asserted within 4/sqrt(samples).
    """
    if d1 == d2:
        raise ValueError("need d1 != d2")
    for eps in (eps1, eps2):
        if not 0.0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    gen = sample_stream(seed, 0)
    alphas = gen.random(samples)
    gammas = gen.random(samples)

    def member(d: int, eps: float) -> np.ndarray:
        frac = frac_product_compensated(alphas, float(d))
        return circ_dist_vec(frac, gammas) <= eps

    m1 = member(d1, eps1)
    m2 = member(d2, eps2)
    joint = float(np.count_nonzero(m1 & m2)) / samples
    marg1 = float(np.count_nonzero(m1)) / samples
    marg2 = float(np.count_nonzero(m2)) / samples
    tol = 4.0 / math.sqrt(samples)
    target = 4.0 * eps1 * eps2
    passed = (
        abs(joint - target) <= tol
        and abs(marg1 - 2.0 * eps1) <= tol
        and abs(marg2 - 2.0 * eps2) <= tol
    )
    return IndependenceReport(
        d1=d1, d2=d2, eps1=eps1, eps2=eps2, samples=samples,
        joint=joint, joint_target=target,
        marginal1=marg1, marginal2=marg2, tolerance=tol, passed=passed,
    )


# ---------------------------------------------------------------------------
# Farey strips


def totient_sieve(m: int) -> np.ndarray:
    """Euler phi for 0..m by sieve."""
    if m < 0:
        raise ValueError("m must be >= 0")
    phi = np.arange(m + 1, dtype=np.int64)
    for q in range(2, m + 1):
        if phi[q] == q:  # q prime
            phi[q::q] -= phi[q::q] // q
    return phi


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))  # decimal literal of the float


def farey_strip_bound(m: int, sigma, tau) -> Fraction:
    """Exact lower bound (4*sigma*tau / m**3) * sum_{d<=m} d*phi(d) for
    the joint measure of the two approximation strips, clamped to 1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    sg, tu = _as_fraction(sigma), _as_fraction(tau)
    for v in (sg, tu):
        if not Fraction(0) <= v <= Fraction(1, 2):
            raise ValueError("sigma and tau must lie in [0, 1/2]")
    phi = totient_sieve(m)
    total = int(np.dot(np.arange(m + 1, dtype=np.int64), phi))
    bound = Fraction(4) * sg * tu * total / m ** 3
    return min(bound, Fraction(1))


def nearest_farey(alpha: float, m: int):
    """Closest fraction a/d with d <= m to alpha in [0, 1], by mediant
    descent through the Stern-Brocot tree."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    lo, hi = (0, 1), (1, 1)
    while True:
        med = (lo[0] + hi[0], lo[1] + hi[1])
        if med[1] > m:
            break
        t = alpha * med[1]
        if t < med[0]:
            hi = med
        elif t > med[0]:
            lo = med
        else:
            return med
    if alpha - lo[0] / lo[1] <= hi[0] / hi[1] - alpha:
        return lo
    return hi


def farey_in_S(alpha: float, m: int, sigma) -> bool:
    """alpha within sigma/m**2 of some reduced fraction a/d, d <= m."""
    sg = _as_fraction(sigma)
    a, d = nearest_farey(alpha, m)
    return abs(Fraction(alpha) - Fraction(a, d)) <= sg / m ** 2


def farey_in_T(alpha: float, gamma: float, m: int, tau) -> bool:
    """dist(d*alpha - gamma) <= tau/m for some 1 <= d <= m."""
    tu = float(_as_fraction(tau))
    for d in range(1, m + 1):
        v = (d * alpha - gamma) % 1.0
        if min(v, 1.0 - v) <= tu / m:
            return True
    return False


@dataclass
class FareyMcReport:
    m: int
    sigma: float
    tau: float
    samples: int
    estimate: float
    bound: float
    tolerance: float
    passed: bool


def farey_strip_mc(m: int, sigma, tau, samples: int, seed: int) -> FareyMcReport:
    """Monte Carlo measure of the strip intersection, checked against
    the exact lower bound minus 4/sqrt(samples)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sg, tu = _as_fraction(sigma), _as_fraction(tau)
    bound = farey_strip_bound(m, sg, tu)

    gen = sample_stream(seed, 0)
    alphas = gen.random(samples)
    gammas = gen.random(samples)
    ds = np.arange(1, m + 1, dtype=np.float64)

    t = alphas[:, None] * ds[None, :]
    near = np.abs(t - np.rint(t))
    thresh = float(sg) * ds / (m * m)
    in_s = np.any(near <= thresh[None, :], axis=1)

    v = np.mod(t - gammas[:, None], 1.0)
    circ = np.minimum(v, 1.0 - v)
    in_t = np.any(circ <= float(tu) / m, axis=1)

    estimate = float(np.count_nonzero(in_s & in_t)) / samples
    tol = 4.0 / math.sqrt(samples)
    return FareyMcReport(
        m=m, sigma=float(sg), tau=float(tu), samples=samples,
        estimate=estimate, bound=float(bound), tolerance=tol,
        passed=estimate >= float(bound) - tol,
    )


# ---------------------------------------------------------------------------
# divergence probe for the block construction


def _exact_dist_le(r: int, den: int, thr_num: int, thr_den: int) -> bool:
    """min(r, den - r)/den <= thr_num/thr_den, all integers, exact."""
    dn = min(r, den - r)
    return dn * thr_den <= den * thr_num


def _in_strip_S(level, num: int, bits: int, eps: Fraction) -> bool:
    n, w, delta = level.n, level.w, level.delta
    d_max = (n * eps.numerator) // eps.denominator  # floor(n * eps)
    if d_max < 1:
        return False
    den = 1 << bits
    for d in range(1, d_max + 1):
        r = (d * delta * num) % den
        if _exact_dist_le(r, den, eps.numerator, eps.denominator * w * n):
            return True
    return False


def _in_strip_T(level, num: int, bits: int, gamma: float) -> bool:
    n, w, delta = level.n, level.w, level.delta
    d_max = (n * w) // 20
    if d_max < 1:
        return False
    gp, gq = gamma.as_integer_ratio()
    gk = gq.bit_length() - 1  # gq == 2**gk
    ell = max(bits, gk)
    den = 1 << ell
    gnum = gp << (ell - gk)
    shift = ell - bits
    for d in range(1, d_max + 1):
        r = ((d * delta * num << shift) - gnum) % den
        if _exact_dist_le(r, den, 1, 8 * n):
            return True
    return False


@dataclass
class ProbeLevel:
    t: int
    checkpoint: int
    s_hits: int
    t_hits: int
    u_hits: int


@dataclass
class ProbeReport:
    samples: int
    threshold: float
    levels: list
    max_f: list                      # per-sample max of F over checkpoints
    exceed_fraction: float           # fraction with max F >= threshold
    u_hit_fraction: float            # fraction landing in some U level
    implication_failures: list       # (sample, t) with U membership but small F
    joint_t_hits: dict               # pairwise T co-membership counts

    @property
    def implication_ok(self) -> bool:
        return not self.implication_failures


def limsup_probe(b: BlockConstruction, samples: int, seed: int) -> ProbeReport:
    """Sample (alpha, gamma), evaluate F(alpha, gamma, 1, .) at block
    boundaries, and measure membership in the resonance sets of each
    level: S (alpha scaled-well-approximable), T (gamma trapped near a
    low multiple of scaled alpha) and U = S cap T.

    Membership is decided with exact integer arithmetic on the sampled
    dyadic rationals.  Every sample verified to lie in U at level t
    must satisfy F >= 1/(160*epsilon) at that checkpoint; violations
    are reported (none are expected).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    eps = b.epsilon
    seq = b.concatenated
    checkpoints = b.checkpoints
    m_max = checkpoints[-1]
    elements = seq.prefix(m_max)
    bits = alpha_bits_for(elements[-1])
    threshold = Fraction(1) / (160 * eps)

    nlevels = len(b.levels)
    s_hits = [0] * nlevels
    t_hits = [0] * nlevels
    u_hits = [0] * nlevels
    joint_t = {}
    max_f = []
    exceed = 0
    u_any = 0
    failures = []

    for i in range(samples):
        gen = sample_stream(seed, i)
        num, _ = draw_alpha(gen, bits)
        gamma = float(gen.random())
        pts_all = dilate_rational(elements, m_max, num, bits)

        counts = []
        for m in checkpoints:
            counts.append(pair_count_fast(pts_all[:m], gamma, 1.0))

        sample_exceeds = False
        best = 0.0
        in_t_levels = []
        any_u = False
        for li, (lv, m, c) in enumerate(zip(b.levels, checkpoints, counts)):
            f = c / m
            best = max(best, f)
            # exact comparison F >= 1/(160 eps)
            if c * 160 * eps.numerator >= m * eps.denominator:
                sample_exceeds = True
            in_s = _in_strip_S(lv, num, bits, eps)
            in_t = _in_strip_T(lv, num, bits, gamma)
            if in_s:
                s_hits[li] += 1
            if in_t:
                t_hits[li] += 1
                in_t_levels.append(li)
            if in_s and in_t:
                u_hits[li] += 1
                any_u = True
                if c * 160 * eps.numerator < m * eps.denominator:
                    failures.append({"sample": i, "t": lv.t, "f": f})
        for a in range(len(in_t_levels)):
            for bb in range(a + 1, len(in_t_levels)):
                key = (b.levels[in_t_levels[a]].t, b.levels[in_t_levels[bb]].t)
                joint_t[key] = joint_t.get(key, 0) + 1
        max_f.append(best)
        if sample_exceeds:
            exceed += 1
        if any_u:
            u_any += 1

    levels = [
        ProbeLevel(t=lv.t, checkpoint=m, s_hits=s_hits[li],
                   t_hits=t_hits[li], u_hits=u_hits[li])
        for li, (lv, m) in enumerate(zip(b.levels, checkpoints))
    ]
    return ProbeReport(
        samples=samples,
        threshold=float(threshold),
        levels=levels,
        max_f=max_f,
        exceed_fraction=exceed / samples,
        u_hit_fraction=u_any / samples,
        implication_failures=failures,
        joint_t_hits=joint_t,
    )


def u_witness(b: BlockConstruction, t: int):
    """A deterministic pair (alpha_num, alpha_bits, gamma) inside the
    level-t resonance set U, or None when that set is empty (it is
    empty whenever floor(2**t * epsilon) < 1)."""
    lv = b.level(t)
    eps = b.epsilon
    if (lv.n * eps.numerator) // eps.denominator < 1:
        return None
    bits = alpha_bits_for(b.concatenated.max_element)
    j = lv.delta.bit_length() - 1  # delta == 2**j
    if j >= bits:
        return None
    # alpha = k / 2**j exactly, so every multiple of delta*alpha is an integer
    k = ((1 << j) // 3) | 1
    num = k << (bits - j)
    gamma = 1.0 / (16 * lv.n)  # dyadic, exact
    if not (_in_strip_S(lv, num, bits, eps) and _in_strip_T(lv, num, bits, gamma)):
        return None
    return num, bits, gamma


# ---------------------------------------------------------------------------
# energy regime diagnostics


@dataclass
class EnergyDiagnostic:
    rows: list          # (n, energy, ratio E/n**3)
    running_min: float
    trend: str          # "decreasing-toward-zero" | "bounded-below-so-far"


def energy_ratio_diagnostic(seq, checkpoints) -> EnergyDiagnostic:
    """Normalized energy E(A_n)/n**3 at each checkpoint.

    A vanishing lower envelope is the feasibility signal for Poissonian
    behavior along a subsequence; a floor bounded away from zero is the
    dense-sequence obstruction regime.
    """
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise ValueError("need at least one checkpoint")
    rows = []
    for n in checkpoints:
        e = additive_energy(seq, n)
        rows.append((n, e, e / n ** 3))
    ratios = [r for _, _, r in rows]
    running_min = min(ratios)
    trend = (
        "decreasing-toward-zero"
        if running_min < ratios[0] / 2 or running_min < 1e-9
        else "bounded-below-so-far"
    )
    return EnergyDiagnostic(rows=rows, running_min=running_min, trend=trend)
