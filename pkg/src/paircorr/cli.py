"""Command line front end.

Subcommands: gen, stats, mc, equi, blocks-verify, farey.  Flat
key=value config files (# comments) can pre-set any long flag; command
line flags win over the file, the file over built-in defaults.  Every
output embeds the resolved semantic configuration and the tool
version, and reruns with the same configuration are byte-identical,
whatever the worker count.

Exit codes: 0 success, 1 an enabled assertion failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .corestats import (
    IntegerSequence,
    SequenceError,
    additive_energy,
    dilate,
    repr_profile,
)
from .equidist import (
    NonequidistParams,
    interval_count,
    load_points,
    overrep_search,
    rotate_points,
    star_discrepancy,
    verify_ppc_failure,
)
from .experiments import (
    ExperimentConfig,
    expectation_check,
    farey_strip_bound,
    farey_strip_mc,
    limsup_probe,
    run_mc,
    variance_check,
)
from .sequences import (
    BlockBuildError,
    BlockConstruction,
    PsiSpec,
    build_blocks,
    gen_lacunary,
    gen_powers,
    gen_primes,
    verify_block,
)


class CheckFailed(RuntimeError):
    """An enabled assertion did not hold; maps to exit code 1."""


class UsageError(ValueError):
    """Bad flags or config; maps to exit code 2."""


# ---------------------------------------------------------------------------
# serialization helpers


def _round12(value):
    if isinstance(value, float):
        return float(f"{value:.12g}")
    return value


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return _round12(obj)


def _emit(payload: dict, out: str | None, fmt: str, csv_rows=None,
          csv_header=None) -> None:
    if fmt == "json":
        text = json.dumps(_rounded(payload), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        if csv_rows is None:
            raise UsageError("this subcommand has no CSV form")
        buf = io.StringIO()
        buf.write("# " + json.dumps(_rounded(payload.get("config", {})),
                                    sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(csv_header)
        for row in csv_rows:
            writer.writerow([_round12(v) for v in row])
        text = buf.getvalue()
    else:
        raise UsageError(f"unknown format: {fmt}")
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tool_stamp() -> dict:
    return {"name": "paircorr", "version": __version__}


# ---------------------------------------------------------------------------
# config file handling


def read_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = text.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace, file_keys: dict, defaults: dict) -> dict:
    """flags > config file > defaults; returns plain strings or parsed
    flag values."""
    resolved = dict(defaults)
    resolved.update(file_keys)
    for key, value in vars(args).items():
        if key in ("func", "config"):
            continue
        if value is not None:
            resolved[key] = value
    return resolved


def _as_int(resolved, key):
    try:
        return int(resolved[key])
    except (KeyError, ValueError, TypeError):
        raise UsageError(f"bad or missing integer for '{key}'")


def _as_float_list(resolved, key):
    raw = resolved.get(key)
    if raw is None:
        raise UsageError(f"missing '{key}'")
    if isinstance(raw, str):
        parts = raw.split(",")
    else:
        parts = raw
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad real list for '{key}'")


def _as_int_list(resolved, key):
    raw = resolved.get(key)
    if raw is None:
        raise UsageError(f"missing '{key}'")
    parts = raw.split(",") if isinstance(raw, str) else raw
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad integer list for '{key}'")


# ---------------------------------------------------------------------------
# sequence sources


def _sequence_from(resolved) -> tuple:
    """Build (IntegerSequence, label) from family flags or a file."""
    seq_file = resolved.get("seq_file")
    if seq_file:
        return IntegerSequence.from_file(seq_file), f"file:{seq_file}"
    family = resolved.get("family")
    if not family:
        raise UsageError("need --family or --seq-file")
    count = _as_int(resolved, "count")
    if family == "powers":
        k = int(resolved.get("k", 2))
        return gen_powers(k, count), f"powers:k={k},count={count}"
    if family == "primes":
        return gen_primes(count), f"primes:count={count}"
    if family == "lacunary":
        base = int(resolved.get("base", 2))
        return gen_lacunary(base, count), f"lacunary:base={base},count={count}"
    raise UsageError(f"unknown family: {family!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    defaults = {"seed": "0", "count": None, "out": None}
    resolved = _resolve(args, file_keys, defaults)
    family = resolved.get("family")
    out = resolved.get("out")
    if not out:
        raise UsageError("gen needs --out")
    if family == "blocks":
        psi = PsiSpec.from_string(resolved.get("psi", "powerlog:1,1,e"))
        epsilon = Fraction(str(resolved.get("epsilon", "1/400")))
        tmax = _as_int(resolved, "tmax")
        seed = _as_int(resolved, "seed")
        construction = build_blocks(psi, epsilon, tmax, seed)
        construction.concatenated.to_file(out)
        construction.to_json(out + ".blocks.json")
        return 0
    if family == "file":
        seq = IntegerSequence.from_file(resolved.get("seq_file") or "")
        seq.to_file(out)
        return 0
    seq, _ = _sequence_from(resolved)
    seq.to_file(out)
    return 0


def cmd_stats(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    resolved = _resolve(args, file_keys, {"format": "csv", "out": None})
    seq = IntegerSequence.from_file(resolved.get("seq_file") or "")
    checkpoints = (
        _as_int_list(resolved, "checkpoints")
        if resolved.get("checkpoints")
        else [len(seq)]
    )
    rows = []
    for n in checkpoints:
        profile = repr_profile(seq, n)
        energy = profile.energy()
        rows.append(
            [n, energy, energy / n ** 3, profile.support_size(),
             profile.max_nonzero_count()]
        )
    payload = {
        "tool": _tool_stamp(),
        "config": {"command": "stats", "seq_file": resolved.get("seq_file"),
                   "checkpoints": checkpoints},
        "rows": [
            {"n": r[0], "energy": r[1], "energy_ratio": r[2],
             "support": r[3], "max_r": r[4]}
            for r in rows
        ],
    }
    _emit(payload, resolved.get("out"), resolved.get("format", "csv"),
          csv_rows=rows, csv_header=["n", "energy", "energy_ratio",
                                     "support", "max_r"])
    return 0


def cmd_mc(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    defaults = {
        "mode": "iid", "samples": None, "seed": "0", "s": None, "n": None,
        "check": "expectation", "workers": "1", "format": "json", "out": None,
    }
    resolved = _resolve(args, file_keys, defaults)
    mode = {"iid": "iid-random", "iid-random": "iid-random",
            "dilated": "dilated"}.get(resolved.get("mode"))
    if mode is None:
        raise UsageError(f"unknown mode: {resolved.get('mode')!r}")
    samples = _as_int(resolved, "samples")
    if samples < 1:
        raise UsageError("samples must be >= 1")
    seed = _as_int(resolved, "seed")
    s_grid = _as_float_list(resolved, "s")
    n_schedule = _as_int_list(resolved, "n")
    workers = _as_int(resolved, "workers")

    sequence, label = (None, None)
    if mode == "dilated":
        sequence, label = _sequence_from(resolved)

    config = ExperimentConfig(
        master_seed=seed, samples=samples, s_grid=s_grid,
        n_schedule=n_schedule, mode=mode, sequence=sequence,
        sequence_label=label or "",
    )
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc))

    check_kind = resolved.get("check", "expectation")
    if check_kind not in ("none", "expectation", "variance", "both"):
        raise UsageError(f"unknown check: {check_kind!r}")
    report = run_mc(config, workers=workers)
    checks = []
    if check_kind in ("expectation", "both"):
        checks.append(expectation_check(config, report=report))
    if check_kind in ("variance", "both"):
        checks.append(variance_check(config, report=report))

    payload = {
        "tool": _tool_stamp(),
        "config": {
            "command": "mc",
            "check": check_kind,
            **report.config,
        },
        "report": report.to_dict()["cells"],
        "checks": [c.to_dict() for c in checks],
    }
    rows = [
        [c["s"], c["n"], c["mean"], c["variance"], c["min"], c["max"],
         c["deviation"]]
        for c in report.to_dict()["cells"]
    ]
    _emit(payload, resolved.get("out"), resolved.get("format", "json"),
          csv_rows=rows,
          csv_header=["s", "n", "mean", "variance", "min", "max", "deviation"])
    if any(not c.passed for c in checks):
        raise CheckFailed("a moment check failed; see the report")
    return 0


def cmd_equi(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    defaults = {
        "format": "json", "out": None, "k_partition": "8", "rotate": None,
    }
    resolved = _resolve(args, file_keys, defaults)

    if resolved.get("points"):
        points = load_points(resolved["points"])
        source = f"points:{resolved['points']}"
    elif resolved.get("seq_file") or resolved.get("family"):
        seq, label = _sequence_from(resolved)
        alpha = float(resolved.get("alpha", 0.0))
        n = int(resolved.get("prefix", len(seq)))
        points = dilate(seq, n, alpha)
        source = f"dilated:{label},alpha={alpha}"
    else:
        raise UsageError("equi needs --points or a sequence source")
    if points.size == 0:
        raise UsageError("empty input")

    if resolved.get("rotate") is not None:
        points = rotate_points(points, float(resolved["rotate"]))

    checkpoints = (
        _as_int_list(resolved, "checkpoints")
        if resolved.get("checkpoints")
        else [points.size]
    )
    if max(checkpoints) > points.size:
        raise UsageError("checkpoint beyond available points")

    k_partition = _as_int(resolved, "k_partition")
    over = overrep_search(points, k_partition, checkpoints)
    payload = {
        "tool": _tool_stamp(),
        "config": {
            "command": "equi", "source": source, "checkpoints": checkpoints,
            "k_partition": k_partition, "rotate": resolved.get("rotate"),
        },
        "star_discrepancy": {
            str(n): star_discrepancy(points[:n]) for n in checkpoints
        },
        "overrepresented": {
            "interval": list(over.interval), "deviation": over.deviation,
        },
    }

    failure_ok = True
    if resolved.get("cut") is not None:
        params = NonequidistParams(
            cut=float(resolved["cut"]), mass=float(resolved["mass"]),
            gamma=float(resolved["gamma"]),
        )
        s_list = _as_int_list(resolved, "s_list") if resolved.get("s_list") else [4]
        rep = verify_ppc_failure(points, checkpoints, params, s_list)
        payload["ppc_failure"] = {
            "qualifying": rep.qualifying,
            "certificate": rep.certificate,
            "certificate_lhs": rep.certificate_lhs,
            "certificate_rhs": rep.certificate_rhs,
            "strict_geometry": rep.strict_geometry,
            "bound_respected": rep.bound_respected,
            "cells": [
                {"s": c.s, "n": c.n, "f": c.f_value, "bound": c.bound,
                 "passed": c.passed}
                for c in rep.cells
            ],
        }
        if rep.certificate and rep.bound_respected:
            payload["ppc_failure"]["message"] = (
                f"failure certified: {_round12(rep.certificate_lhs)} < "
                f"{_round12(rep.certificate_rhs)}"
            )
        failure_ok = rep.certificate and rep.bound_respected

    rows = [[n, payload["star_discrepancy"][str(n)]] for n in checkpoints]
    _emit(payload, resolved.get("out"), resolved.get("format", "json"),
          csv_rows=rows, csv_header=["n", "star_discrepancy"])
    if not failure_ok:
        raise CheckFailed("ppc failure certificate did not verify")
    return 0


def cmd_blocks_verify(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    resolved = _resolve(args, file_keys, {"format": "json", "out": None})
    path = resolved.get("blocks")
    if not path:
        raise UsageError("blocks-verify needs --blocks <record.json>")
    construction = BlockConstruction.from_json(path)
    reports = [verify_block(construction, lv.t) for lv in construction.levels]
    payload = {
        "tool": _tool_stamp(),
        "config": {"command": "blocks-verify", "blocks": path},
        "levels": [
            {
                "t": r.level, "prop1": r.prop1_ok, "prop2": r.prop2_ok,
                "prop3": r.prop3_ok, "witness": r.witness,
            }
            for r in reports
        ],
        "all_passed": all(r.passed for r in reports),
    }
    rows = [[r.level, r.prop1_ok, r.prop2_ok, r.prop3_ok] for r in reports]
    _emit(payload, resolved.get("out"), resolved.get("format", "json"),
          csv_rows=rows, csv_header=["t", "prop1", "prop2", "prop3"])
    if not payload["all_passed"]:
        raise CheckFailed("a block property failed verification")
    return 0


def cmd_farey(args) -> int:
    file_keys = read_config_file(args.config) if args.config else {}
    defaults = {"samples": None, "seed": "0", "format": "json", "out": None}
    resolved = _resolve(args, file_keys, defaults)
    m = _as_int(resolved, "m")
    sigma = Fraction(str(resolved.get("sigma", "1/2")))
    tau = Fraction(str(resolved.get("tau", "1/2")))
    bound = farey_strip_bound(m, sigma, tau)
    payload = {
        "tool": _tool_stamp(),
        "config": {"command": "farey", "m": m, "sigma": str(sigma),
                   "tau": str(tau), "seed": _as_int(resolved, "seed")},
        "bound": str(bound),
        "bound_float": float(bound),
    }
    rows = [[m, str(sigma), str(tau), float(bound)]]
    passed = True
    if resolved.get("samples"):
        samples = _as_int(resolved, "samples")
        rep = farey_strip_mc(m, sigma, tau, samples, _as_int(resolved, "seed"))
        payload["mc"] = {
            "samples": samples, "estimate": rep.estimate,
            "tolerance": rep.tolerance, "passed": rep.passed,
        }
        rows[0].extend([samples, rep.estimate, rep.passed])
        passed = rep.passed
    _emit(payload, resolved.get("out"), resolved.get("format", "json"),
          csv_rows=rows,
          csv_header=["m", "sigma", "tau", "bound"] +
                     (["samples", "estimate", "passed"] if resolved.get("samples") else []))
    if not passed:
        raise CheckFailed("strip measure estimate fell below the bound")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paircorr",
        description="Pair-correlation statistics of dilated integer "
                    "sequences, with reproducible Monte Carlo experiments.",
    )
    parser.add_argument("--version", action="version",
                        version=f"paircorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv"], help="output format")
    common.add_argument("--seed", help="master seed (64-bit integer)")

    p = sub.add_parser("gen", parents=[common],
                       help="generate a sequence file")
    p.add_argument("--family", choices=["powers", "primes", "lacunary",
                                        "blocks", "file"])
    p.add_argument("--k", help="exponent for powers")
    p.add_argument("--base", help="base for lacunary")
    p.add_argument("--count", help="number of elements")
    p.add_argument("--seq-file", dest="seq_file", help="input for family=file")
    p.add_argument("--psi", help="psi spec for blocks, e.g. powerlog:1,1,e")
    p.add_argument("--epsilon", help="epsilon for blocks, e.g. 0.0025")
    p.add_argument("--tmax", help="top block level")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", parents=[common],
                       help="energy and profile statistics of a sequence file")
    p.add_argument("--seq-file", dest="seq_file", required=True)
    p.add_argument("--checkpoints", help="comma list of prefix sizes")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mc", parents=[common],
                       help="Monte Carlo experiment over (alpha, gamma)")
    p.add_argument("--mode", help="iid | dilated")
    p.add_argument("--samples", help="number of (alpha, gamma) draws")
    p.add_argument("--s", help="comma list of window scales")
    p.add_argument("--n", help="comma list of prefix sizes")
    p.add_argument("--check", choices=["none", "expectation", "variance", "both"])
    p.add_argument("--workers", help="process count (does not affect results)")
    p.add_argument("--family", choices=["powers", "primes", "lacunary"])
    p.add_argument("--k")
    p.add_argument("--base")
    p.add_argument("--count")
    p.add_argument("--seq-file", dest="seq_file")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("equi", parents=[common],
                       help="equidistribution diagnostics")
    p.add_argument("--points", help="file with one point per line")
    p.add_argument("--seq-file", dest="seq_file")
    p.add_argument("--family", choices=["powers", "primes", "lacunary"])
    p.add_argument("--k")
    p.add_argument("--base")
    p.add_argument("--count")
    p.add_argument("--alpha", help="dilation for a sequence source")
    p.add_argument("--prefix", help="prefix length for a sequence source")
    p.add_argument("--rotate", help="rotate points by this before analysis")
    p.add_argument("--checkpoints")
    p.add_argument("--k-partition", dest="k_partition")
    p.add_argument("--cut", help="deficient arc length")
    p.add_argument("--mass", help="maximal share allowed in the arc")
    p.add_argument("--gamma", help="inhomogeneous shift")
    p.add_argument("--s-list", dest="s_list", help="comma list of integer s")
    p.set_defaults(func=cmd_equi)

    p = sub.add_parser("blocks-verify", parents=[common],
                       help="re-verify a stored block construction")
    p.add_argument("--blocks", help="construction record JSON")
    p.set_defaults(func=cmd_blocks_verify)

    p = sub.add_parser("farey", parents=[common],
                       help="strip measure bound and Monte Carlo estimate")
    p.add_argument("--m", help="denominator cap")
    p.add_argument("--sigma")
    p.add_argument("--tau")
    p.add_argument("--samples")
    p.set_defaults(func=cmd_farey)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CheckFailed, BlockBuildError) as exc:
        print(f"paircorr: check failed: {exc}", file=sys.stderr)
        return 1
    except (UsageError, SequenceError, ValueError, OSError) as exc:
        print(f"paircorr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
