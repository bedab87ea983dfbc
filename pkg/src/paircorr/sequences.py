"""Integer sequence generators and the scaled-block construction.

Families: powers n**k, primes, lacunary base**n, and a randomized
construction of concatenated blocks

    B subset  Delta * ((N*W, 2*N*W] cap ZZ),      W = floor(1/psi(N)),

one block per level N = 2**t, engineered so that the difference counts
r_B(Delta*d) of each block are uniformly large on a long range of d
while staying bounded above.  The three verified block properties are

  (1)  r(d) <= 2*N/W               for all d != 0,
  (2)  r(d) >= N/(2*W)             for all 0 < |d| < N*W/10,
  (3)  N/2 <= #B <= 2*N,

checked with exact integer arithmetic on the underlying (unscaled)
values.  The scale Delta grows fast enough that sums from different
blocks can never collide, so the additive energy of any prefix is
driven by the most recent complete block.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .corestats import IntegerSequence, SequenceError, additive_energy

_PROFILE_BLOCK_CELLS = 4_000_000


# ---------------------------------------------------------------------------
# psi specifications


@dataclass(frozen=True)
class PsiSpec:
    """Weakly decreasing density target psi with values in (0, 1].

    Kinds:
      constant   psi(n) = c
      powerlog   psi(n) = c / log(n + shift)**p
      iterlog    psi(n) = 1 / (log n * loglog n * ... * log^(level) n)
      table      step function from explicit (n, value) pairs
    """

    kind: str
    c: float = 1.0
    p: float = 1.0
    shift: float = 0.0
    level: int = 1
    entries: tuple = ()

    @classmethod
    def constant(cls, c: float) -> "PsiSpec":
        if not 0.0 < c <= 1.0:
            raise ValueError("constant psi must lie in (0, 1]")
        return cls(kind="constant", c=float(c))

    @classmethod
    def powerlog(cls, c: float = 1.0, p: float = 1.0, shift: float = 0.0) -> "PsiSpec":
        if c <= 0.0 or p <= 0.0:
            raise ValueError("powerlog psi needs c > 0 and p > 0")
        return cls(kind="powerlog", c=float(c), p=float(p), shift=float(shift))

    @classmethod
    def iterlog(cls, level: int = 1) -> "PsiSpec":
        if level < 1:
            raise ValueError("iterlog level must be >= 1")
        return cls(kind="iterlog", level=int(level))

    @classmethod
    def table(cls, entries) -> "PsiSpec":
        rows = sorted((int(n), float(v)) for n, v in entries)
        if not rows:
            raise ValueError("table psi needs at least one entry")
        prev = None
        for n, v in rows:
            if not 0.0 < v <= 1.0:
                raise ValueError(f"table value at {n} outside (0, 1]")
            if prev is not None and v > prev:
                raise ValueError("table values must be weakly decreasing")
            prev = v
        return cls(kind="table", entries=tuple(rows))

    def domain_start(self) -> int:
        """Smallest integer argument at which psi is defined and <= 1."""
        if self.kind == "constant":
            return 1
        if self.kind == "table":
            return self.entries[0][0]
        if self.kind == "powerlog":
            n = 1
            while True:
                arg = n + self.shift
                if arg > 1.0 and self.c / math.log(arg) ** self.p <= 1.0:
                    return n
                n += 1
                if n > 10 ** 9:
                    raise ValueError("powerlog psi never enters (0, 1]")
        n = 1
        while True:
            if self._iterlog_product(n) is not None:
                return n
            n += 1
            if n > 10 ** 9:
                raise ValueError("iterlog psi domain start not found")

    def _iterlog_product(self, n: float):
        prod = 1.0
        arg = float(n)
        for _ in range(self.level):
            arg = math.log(arg) if arg > 0 else -1.0
            if arg <= 1.0:
                return None
            prod *= arg
        return prod

    def value(self, n) -> float:
        """psi(n); raises for arguments below the domain start."""
        if self.kind == "constant":
            return self.c
        if self.kind == "table":
            if n < self.entries[0][0]:
                raise ValueError(f"psi undefined below n={self.entries[0][0]}")
            out = self.entries[0][1]
            for key, v in self.entries:
                if key <= n:
                    out = v
                else:
                    break
            return out
        if self.kind == "powerlog":
            arg = n + self.shift
            if arg <= 1.0:
                raise ValueError(f"psi undefined at n={n}")
            v = self.c / math.log(arg) ** self.p
            if v > 1.0:
                raise ValueError(f"psi undefined at n={n} (value {v} > 1)")
            return v
        prod = self._iterlog_product(n)
        if prod is None:
            raise ValueError(f"psi undefined at n={n}")
        return 1.0 / prod

    def inverse_floor(self, n) -> int:
        """W = floor(1/psi(n)) >= 1; the normalization 1/W is the
        working psi wherever an integer reciprocal is required."""
        return max(1, math.floor(1.0 / self.value(n)))

    def normalized_value(self, n) -> float:
        return 1.0 / self.inverse_floor(n)

    def to_string(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.c!r}"
        if self.kind == "powerlog":
            shift = "e" if self.shift == math.e else repr(self.shift)
            return f"powerlog:{self.c!r},{self.p!r},{shift}"
        if self.kind == "iterlog":
            return f"iterlog:{self.level}"
        body = ",".join(f"{n}={v!r}" for n, v in self.entries)
        return f"table:{body}"

    @classmethod
    def from_string(cls, text: str) -> "PsiSpec":
        kind, _, body = text.partition(":")
        kind = kind.strip().lower()
        if kind == "constant":
            return cls.constant(float(body))
        if kind in ("powerlog", "power-log"):
            parts = [p.strip() for p in body.split(",")] if body else []
            c = float(parts[0]) if len(parts) >= 1 and parts[0] else 1.0
            pexp = float(parts[1]) if len(parts) >= 2 and parts[1] else 1.0
            shift = 0.0
            if len(parts) >= 3 and parts[2]:
                shift = math.e if parts[2] == "e" else float(parts[2])
            return cls.powerlog(c=c, p=pexp, shift=shift)
        if kind in ("iterlog", "iterated-log"):
            return cls.iterlog(int(body) if body else 1)
        if kind == "table":
            entries = []
            for item in body.split(","):
                n_str, _, v_str = item.partition("=")
                entries.append((int(n_str), float(v_str)))
            return cls.table(entries)
        raise ValueError(f"unknown psi kind: {kind!r}")


def psi_eval(psi: PsiSpec, n) -> float:
    """Evaluate psi(n); deterministic, weakly decreasing on its domain."""
    return psi.value(n)


# ---------------------------------------------------------------------------
# simple generators


def gen_powers(k: int, count: int) -> IntegerSequence:
    """(1**k, 2**k, ..., count**k)."""
    if k < 1 or count < 1:
        raise ValueError("need k >= 1 and count >= 1")
    return IntegerSequence([i ** k for i in range(1, count + 1)], validate=False)


def gen_primes(count: int) -> IntegerSequence:
    """First `count` primes by sieve."""
    if count < 1:
        raise ValueError("need count >= 1")
    if count < 6:
        bound = 15
    else:
        x = float(count)
        bound = int(x * (math.log(x) + math.log(math.log(x)))) + 10
    while True:
        sieve = np.ones(bound + 1, dtype=bool)
        sieve[:2] = False
        for q in range(2, int(bound ** 0.5) + 1):
            if sieve[q]:
                sieve[q * q::q] = False
        primes = np.flatnonzero(sieve)
        if primes.size >= count:
            return IntegerSequence(primes[:count].tolist(), validate=False)
        bound *= 2


def gen_lacunary(base: int, count: int) -> IntegerSequence:
    """(base, base**2, ..., base**count); a minimal-energy reference
    family, Sidon apart from boundary collisions."""
    if base < 2:
        raise ValueError("need base >= 2")
    if count < 1:
        raise ValueError("need count >= 1")
    return IntegerSequence([base ** i for i in range(1, count + 1)], validate=False)


# ---------------------------------------------------------------------------
# block construction


class BlockBuildError(RuntimeError):
    """Raised when the randomized block search exhausts its retries."""

    def __init__(self, level: int, failed_property: int, witness):
        self.level = level
        self.failed_property = failed_property
        self.witness = witness
        super().__init__(
            f"block search failed at level t={level}: "
            f"property ({failed_property}) kept failing, witness d={witness}"
        )


@dataclass
class BlockLevel:
    t: int                      # level index; block parameter n = 2**t
    n: int
    delta: int                  # scale, a power of two
    w: int                      # floor of 1/psi(n) after normalization
    values: list                # underlying integers in (n*w, 2*n*w]

    @property
    def elements(self) -> list:
        return [self.delta * v for v in self.values]

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass
class BlockVerification:
    level: int
    prop1_ok: bool
    prop2_ok: bool
    prop3_ok: bool
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.prop1_ok and self.prop2_ok and self.prop3_ok


@dataclass
class BlockConstruction:
    psi: PsiSpec
    epsilon: Fraction
    seed: int
    levels: list
    concatenated: IntegerSequence

    @property
    def checkpoints(self) -> list:
        """Cumulative sizes after each complete block."""
        out, total = [], 0
        for lv in self.levels:
            total += lv.size
            out.append(total)
        return out

    def level(self, t: int) -> BlockLevel:
        for lv in self.levels:
            if lv.t == t:
                return lv
        raise ValueError(f"no level t={t} in this construction")

    def to_json(self, path) -> None:
        """Construction record plus one element file per level."""
        base = os.path.splitext(os.path.basename(str(path)))[0]
        dirname = os.path.dirname(str(path)) or "."
        levels = []
        for lv in self.levels:
            elems_name = f"{base}.level{lv.t}.txt"
            with open(os.path.join(dirname, elems_name), "w", encoding="ascii") as fh:
                for e in lv.elements:
                    fh.write(f"{e}\n")
            levels.append(
                {
                    "t": lv.t,
                    "n": lv.n,
                    "delta": lv.delta,
                    "w": lv.w,
                    "size": lv.size,
                    "elements_path": elems_name,
                }
            )
        record = {
            "psi": self.psi.to_string(),
            "epsilon": f"{self.epsilon.numerator}/{self.epsilon.denominator}",
            "seed": self.seed,
            "levels": levels,
        }
        with open(path, "w", encoding="ascii") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "BlockConstruction":
        dirname = os.path.dirname(str(path)) or "."
        with open(path, "r", encoding="ascii") as fh:
            record = json.load(fh)
        psi = PsiSpec.from_string(record["psi"])
        epsilon = Fraction(record["epsilon"])
        levels = []
        for entry in record["levels"]:
            seq = IntegerSequence.from_file(os.path.join(dirname, entry["elements_path"]))
            delta = int(entry["delta"])
            values = [e // delta for e in seq.elements]
            if any(e % delta for e in seq.elements):
                raise SequenceError(f"level {entry['t']}: elements not multiples of delta")
            levels.append(
                BlockLevel(t=int(entry["t"]), n=int(entry["n"]), delta=delta,
                           w=int(entry["w"]), values=values)
            )
        concatenated = IntegerSequence(
            [e for lv in levels for e in lv.elements], validate=True
        )
        return cls(psi=psi, epsilon=epsilon, seed=int(record.get("seed", 0)),
                   levels=levels, concatenated=concatenated)


def _value_profile(values: list) -> tuple:
    """Counts of pairwise differences of `values`.

    Returns (c, spread) where c[spread + d] = r(d) for |d| <= spread,
    spread being the full value range.
    """
    a = np.array(values, dtype=np.int64)
    n = a.size
    spread = int(a.max() - a.min()) if n else 0
    nbins = 2 * spread + 1
    acc = np.zeros(nbins, dtype=np.int64)
    block = max(1, _PROFILE_BLOCK_CELLS // max(1, n))
    for i0 in range(0, n, block):
        d = (a[i0:i0 + block, None] - a[None, :]).ravel() + spread
        acc += np.bincount(d, minlength=nbins)
    return acc, spread


def _check_block_properties(values: list, n: int, w: int) -> BlockVerification:
    """Exact integer verification of properties (1)-(3)."""
    size = len(values)
    prop3 = (2 * size >= n) and (size <= 2 * n)
    witness = {}
    if not prop3:
        witness["size"] = size

    span = n * w  # admissible window width: values live in (n*w, 2*n*w]
    profile, spread = _value_profile(values)
    center = spread

    prop1 = True
    # r(d) * w <= 2n for every d != 0
    limit = 2 * n
    nonzero = profile.copy()
    nonzero[center] = 0
    worst = int(nonzero.max()) if nonzero.size else 0
    if worst * w > limit:
        prop1 = False
        witness["prop1_d"] = int(np.argmax(nonzero)) - center
        witness["prop1_r"] = worst

    prop2 = True
    # r(d) * 2w >= n for every 0 < d < n*w/10 (profile is symmetric)
    for d in range(1, span):
        if 10 * d >= span:
            break
        r = int(profile[center + d]) if d <= spread else 0
        if 2 * w * r < n:
            prop2 = False
            witness["prop2_d"] = d
            witness["prop2_r"] = r
            break

    return BlockVerification(level=-1, prop1_ok=prop1, prop2_ok=prop2,
                             prop3_ok=prop3, witness=witness)


def _as_epsilon(epsilon) -> Fraction:
    if isinstance(epsilon, Fraction):
        eps = epsilon
    elif isinstance(epsilon, str):
        eps = Fraction(epsilon)
    elif isinstance(epsilon, int):
        eps = Fraction(epsilon)
    else:
        eps = Fraction(str(epsilon))  # decimal literal of a float, exact
    if not Fraction(0) < eps < Fraction(1, 320):
        raise ValueError("epsilon must lie in (0, 1/320)")
    return eps


def build_blocks(psi: PsiSpec, epsilon, t_max: int, seed: int,
                 max_retries: int = 64) -> BlockConstruction:
    """Randomized block construction, one block per level t = 0..t_max.

    Each block is a uniformly drawn size-n subset of the admissible
    window, kept only if properties (1)-(3) verify; deterministic in
    (psi, epsilon, t_max, seed).  The scale of level t is the smallest
    power of two exceeding 4 * n * w * (largest previous element),
    which makes cross-block sum collisions impossible.
    """
    eps = _as_epsilon(epsilon)
    if psi.kind == "constant":
        raise ValueError("constant psi is not admissible for the block construction")
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    if t_max > 14:
        raise ValueError("t_max > 14 exceeds the supported element width")

    levels = []
    max_prev = 1
    for t in range(t_max + 1):
        n = 1 << t
        w = psi.inverse_floor(n)
        span = n * w
        bound = 4 * span * max_prev
        delta = 1 << bound.bit_length()  # smallest power of two > bound

        chosen = None
        report = None
        for retry in range(max_retries):
            key = np.array([np.uint64(seed), np.uint64((t << 32) | retry)],
                           dtype=np.uint64)
            rng = np.random.Generator(np.random.Philox(key=key))
            offsets = rng.choice(span, size=n, replace=False)
            offsets.sort()
            values = (offsets + span + 1).tolist()
            report = _check_block_properties(values, n, w)
            if report.passed:
                chosen = values
                break
        if chosen is None:
            failed = 1 if not report.prop1_ok else (2 if not report.prop2_ok else 3)
            witness = report.witness.get(f"prop{failed}_d", report.witness)
            raise BlockBuildError(t, failed, witness)

        levels.append(BlockLevel(t=t, n=n, delta=delta, w=w, values=chosen))
        max_prev = delta * chosen[-1]

    concatenated = IntegerSequence(
        [e for lv in levels for e in lv.elements], validate=True
    )
    return BlockConstruction(psi=psi, epsilon=eps, seed=seed,
                             levels=levels, concatenated=concatenated)


def verify_block(b: BlockConstruction, t: int) -> BlockVerification:
    """Re-check properties (1)-(3) of the level-t block; reports the
    witnessing d on failure."""
    lv = b.level(t)
    report = _check_block_properties(lv.values, lv.n, lv.w)
    report.level = t
    return report


def block_energy_checkpoints(b: BlockConstruction) -> list:
    """Energy diagnostics at each block boundary.

    Rows: (t, checkpoint m, E(prefix m), psi(m), E / (m**3 psi(m))).
    psi is evaluated with the construction's own spec.
    """
    rows = []
    seq = b.concatenated
    for lv, m in zip(b.levels, b.checkpoints):
        energy = additive_energy(seq, m)
        psi_m = b.psi.value(m) if m >= b.psi.domain_start() else b.psi.value(b.psi.domain_start())
        ratio = energy / (m ** 3 * psi_m)
        rows.append({"t": lv.t, "checkpoint": m, "energy": energy,
                     "psi": psi_m, "ratio": ratio})
    return rows


def cross_block_quadruples(b: BlockConstruction, t_through: int) -> int:
    """Number of collisions a + b = c + d that mix blocks, ignoring the
    trivial rearrangements (a,b,a,b) and (a,b,b,a).  The scale schedule
    makes this zero; checked by brute force in the tests."""
    elems = []
    labels = []
    for lv in b.levels:
        if lv.t > t_through:
            break
        for e in lv.elements:
            elems.append(e)
            labels.append(lv.t)
    count = 0
    m = len(elems)
    for i in range(m):
        for j in range(m):
            sij = elems[i] + elems[j]
            for k in range(m):
                for l in range(m):
                    if elems[k] + elems[l] != sij:
                        continue
                    if (i, j) == (k, l) or (i, j) == (l, k):
                        continue
                    if not (labels[i] == labels[j] == labels[k] == labels[l]):
                        count += 1
    return count
