"""``groupsde`` command line.

Every command writes one JSON report (or CSV with ``--format csv``) and
exits 0 exactly when all verdicts in it pass. Failures carry a ``reason``
tag; validation errors exit with status 2, failed verdicts with status 1.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import io as spec_io
from . import suite, torus
from .errors import GroupSdeError, ValidationError
from .groups import right_cosets
from .measures import haar, mixture
from .sde import (
    DEFAULT_N_MAX,
    DEFAULT_WINDOW,
    compute_Kmu,
    exists_solution,
    extremal_solutions,
    make_model,
    solution_family,
    support_cosets,
    verify_solution,
)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
# how far (in grid units) a rational-noise trajectory may sit from the grid (1/q)Z
GRID_SLACK = 1e-6


class UsageError(ValidationError):
    reason = "usage"


# ------------------------------------------------------------ arg parsing


def _k_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"k window must look like LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty k window {text!r}")
    return lo, hi


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}") from None
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupsde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def output(p, csv_ok=False):
        p.add_argument("--out", type=Path, help="write the report here instead of stdout")
        choices = ["report", "csv"] if csv_ok else ["report"]
        p.add_argument("--format", choices=choices, default="report")

    def model_args(p):
        p.add_argument("--group", required=True, type=Path, help="group spec (JSON)")
        p.add_argument("--automorphism", default="id", help="name from the group spec, 'id', or a spec file")
        p.add_argument("--measure", required=True, type=Path, help="noise law spec (JSON)")
        p.add_argument("--z", type=int, help="support point used as z (default: smallest)")
        p.add_argument("--n-max", type=_positive_int, default=DEFAULT_N_MAX)
        p.add_argument("--k-window", type=_k_window, default=DEFAULT_WINDOW)

    p = sub.add_parser("analyze", help="compute and verify K_mu")
    model_args(p)
    output(p)

    p = sub.add_parser("solve", help="build and verify the solution family of a law lambda_0")
    model_args(p)
    p.add_argument("--lambda", dest="lam", type=Path, help="lambda_0 spec (default: Haar on K_mu)")
    output(p, csv_ok=True)

    p = sub.add_parser("extremals", help="list the extremal solutions, one per coset of K_mu")
    model_args(p)
    output(p)

    p = sub.add_parser("corpus", help="run the invariant suite over the built-in corpus")
    p.add_argument("--seed", type=_nonneg_int, default=corpus_mod.DEFAULT_SEED)
    p.add_argument("--measures", type=_positive_int, default=corpus_mod.DEFAULT_MEASURES)
    p.add_argument("--aut-cap", type=_positive_int, default=corpus_mod.DEFAULT_AUT_CAP)
    p.add_argument("--filter", default=None, help="keep groups whose name contains this text")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--inject-failure", action="store_true", help="perturb one solution law (self-test)")
    output(p, csv_ok=True)

    p = sub.add_parser("torus-remark", help="stationary law of the cat map driven by line noise")
    p.add_argument("--seed", type=_nonneg_int, default=1)
    p.add_argument("--samples", type=_positive_int, default=torus.DEFAULT_SAMPLES)
    p.add_argument("--truncation", type=_positive_int, default=torus.DEFAULT_TRUNCATION)
    p.add_argument("--cutoff", type=_positive_int, default=torus.DEFAULT_CUTOFF)
    p.add_argument("--tolerance", type=_positive_float, default=torus.DEFAULT_TOLERANCE)
    p.add_argument("--threshold", type=_positive_float, default=0.05, help="invariance witness threshold")
    p.add_argument("--max-order", type=_positive_int, default=6)
    p.add_argument("--t-max", type=_positive_float, default=0.3, help="line noise parameter ~ U[0, t_max]")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--csv", type=Path, help="also write the spectrum CSV here")
    output(p, csv_ok=True)

    p = sub.add_parser("torus-t1", help="eta_k = xi_k + frac(eta_{k-1}) on the circle")
    p.add_argument("--noise", default="0,sqrt2-1",
                   help="comma-separated equally likely values; 'sqrt2-1' is accepted (default: 0,sqrt2-1)")
    p.add_argument("--seed", type=_nonneg_int, default=1)
    p.add_argument("--samples", type=_positive_int, default=100_000, help="tail length")
    p.add_argument("--burn-in", type=_nonneg_int, default=1000)
    p.add_argument("--tolerance", type=_positive_float, default=0.02, help="KS distance bound")
    p.add_argument("--csv", type=Path, help="also write the trajectory CSV here")
    output(p, csv_ok=True)
    return parser


# --------------------------------------------------------------- rendering


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _verdict(doc: dict, ok: bool, reason: str | None) -> dict:
    doc["status"] = "PASS" if ok else "FAIL"
    doc["reason"] = None if ok else reason
    return doc


# ----------------------------------------------------------- finite models


def _load_model(args):
    group, autos = spec_io.load_group(args.group)
    phi = spec_io.load_automorphism(args.automorphism, group, autos)
    mu = spec_io.load_measure(args.measure, group)
    if args.z is not None and (not 0 <= args.z < group.order or not mu[args.z]):
        raise UsageError(f"--z {args.z} is not in the support of the measure")
    return make_model(phi, mu, args.z, name=group.name)


def _model_doc(model) -> dict:
    return {
        "group": {"name": model.group.name, "order": model.group.order},
        "automorphism": {"name": model.phi.name, "map": list(model.phi.map)},
        "mu": model.mu.to_strings(),
        "z": model.z,
    }


def cmd_analyze(args) -> tuple[dict, int]:
    model = _load_model(args)
    report = compute_Kmu(model, args.n_max)
    K = report.K
    extremals = extremal_solutions(model, report, args.k_window)
    ext_ok = all(verify_solution(model, f) for f in extremals)
    existence = exists_solution(model)
    canonical = solution_family(model, K, haar(K), args.k_window)
    doc = _model_doc(model)
    doc.update(report.as_dict())
    doc["extremal_count"] = len(extremals)
    doc["k_window"] = list(args.k_window)
    doc["solution_table"] = canonical.table()
    doc["checks"] = {
        "kmu_verified": report.verified,
        "methods_agree": report.methods_agree,
        "extremal_count_is_index": len(extremals) == model.group.order // len(K),
        "extremals_solve": ext_ok,
        "solution_exists": existence.exists,
    }
    ok = all(doc["checks"].values())
    reason = None
    if not report.verified:
        reason = "theorem_violation"
    elif not ok:
        reason = next(k for k, v in doc["checks"].items() if not v)
    doc["status"] = "VERIFIED" if ok else "FAILED"
    doc["reason"] = reason
    return doc, EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> tuple[dict, int]:
    model = _load_model(args)
    report = compute_Kmu(model, args.n_max)
    K = report.K
    lam = haar(K) if args.lam is None else spec_io.load_measure(args.lam, model.group)
    family = solution_family(model, K, lam, args.k_window)
    lo, hi = args.k_window
    verdicts = {str(k): bool(verify_solution(model, family, (k, k))) for k in range(lo, hi + 1)}
    cosets = support_cosets(lam, K)
    doc = _model_doc(model)
    doc.update({
        "K_mu": list(K.members),
        "lambda0": lam.to_strings(),
        "lambda0_cosets": [list(c) for c in cosets],
        "lambda0_coset_count": len(cosets),
        "extremal": len(cosets) == 1,
        "k_window": [lo, hi],
        "table": family.table(),
        "verdicts": verdicts,
    })
    ok = all(verdicts.values())
    return _verdict(doc, ok, "recursion_failed"), EXIT_OK if ok else EXIT_FAIL


def solve_csv(doc: dict) -> str:
    rows = []
    for k, law in sorted(doc["table"].items(), key=lambda kv: int(kv[0])):
        for g, w in sorted(law.items(), key=lambda kv: int(kv[0])):
            rows.append((k, g, w))
    return _csv(("k", "element", "weight"), rows)


def cmd_extremals(args) -> tuple[dict, int]:
    model = _load_model(args)
    report = compute_Kmu(model, args.n_max)
    K = report.K
    fams = extremal_solutions(model, report, args.k_window)
    items = []
    for coset, fam in zip(right_cosets(model.group, K), fams):
        items.append({
            "coset": list(coset),
            "lambda0": fam.lam0.to_strings(),
            "single_coset": len(support_cosets(fam.lam0, K)) == 1,
            "verified": bool(verify_solution(model, fam)),
        })
    mids = []
    for a, b in zip(fams, fams[1:]):
        lam = mixture([a.lam0, b.lam0], [Fraction(1, 2)] * 2)
        fam = solution_family(model, K, lam, args.k_window)
        mids.append({
            "lambda0": lam.to_strings(),
            "coset_count": len(support_cosets(lam, K)),
            "verified": bool(verify_solution(model, fam)),
        })
    doc = _model_doc(model)
    doc.update({
        "K_mu": list(K.members),
        "k_window": list(args.k_window),
        "index": model.group.order // len(K),
        "extremal_count": len(fams),
        "extremals": items,
        "midpoints": mids,
    })
    ok = (
        len(fams) == doc["index"]
        and all(i["single_coset"] and i["verified"] for i in items)
        and all(m["verified"] and m["coset_count"] == 2 for m in mids)
    )
    return _verdict(doc, ok, "extremal_structure"), EXIT_OK if ok else EXIT_FAIL


def cmd_corpus(args) -> tuple[dict, int]:
    entries = corpus_mod.build_corpus(args.seed, args.measures, args.aut_cap, args.filter)
    if not entries:
        raise UsageError(f"no models selected (filter {args.filter!r})")
    results = suite.run_suite(entries, seed=args.seed, workers=args.workers, inject_failure=args.inject_failure)
    doc = suite.summarize(results)
    doc.update({
        "corpus_version": corpus_mod.CORPUS_VERSION,
        "seed": args.seed,
        "filter": args.filter,
        "injected_failure": args.inject_failure,
        "results": [{"model": r.name, "passed": r.passed, "failed_checks": r.failures()} for r in results],
    })
    ok = doc["failed"] == 0
    return _verdict(doc, ok, "invariant_failed"), EXIT_OK if ok else EXIT_FAIL


def corpus_csv(doc: dict) -> str:
    return _csv(
        ("model", "passed", "failed_checks"),
        [(r["model"], int(r["passed"]), ";".join(r["failed_checks"])) for r in doc["results"]],
    )


# ------------------------------------------------------------------- torus


def cmd_torus_stationary(args) -> tuple[dict, int]:
    run = torus.stationary_pipeline(
        args.seed, args.samples, args.truncation, args.cutoff, args.tolerance,
        t_law=torus.UniformLaw(0.0, args.t_max), max_order=args.max_order,
        threshold=args.threshold, workers=args.workers,
    )
    doc = run.as_dict()
    doc["noise"] = {"line_parameter": f"uniform[0, {args.t_max}]"}
    doc["workers"] = args.workers
    doc["_spectrum"] = run.spectrum.rows()
    if not run.stationarity.margin_ok:
        reason = "insufficient_samples"
        doc["warning"] = (
            f"Monte-Carlo margin {run.stationarity.margin:.3g} exceeds tolerance "
            f"{args.tolerance}; increase --samples"
        )
    elif not run.stationarity.passed:
        reason = "not_stationary"
    elif run.control.passed:
        reason = "control_not_rejected"
    else:
        reason = "invariance_unwitnessed"
    return _verdict(doc, run.passed, reason), EXIT_OK if run.passed else EXIT_FAIL


def spectrum_csv(rows) -> str:
    return _csv(("n1", "n2", "re", "im"), [(a, b, repr(re), repr(im)) for a, b, re, im in rows])


def _noise_law(text: str):
    """Equally likely noise values, plus (q, orbit bound) when all of them are rational.

    Rational noise in (1/q)Z keeps eta on that grid inside [min xi, max xi + 1).
    """
    values, exact = [], []
    for part in text.split(","):
        part = part.strip()
        if part in ("sqrt2-1", "sqrt(2)-1"):
            values.append(math.sqrt(2) - 1)
            exact.append(None)
            continue
        try:
            exact.append(Fraction(part))
            values.append(float(exact[-1]))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse noise value {part!r}") from None
    if not values:
        raise UsageError("empty noise specification")
    grid = None
    if None not in exact:
        q = math.lcm(*(x.denominator for x in exact))
        grid = q, math.ceil(q * (max(exact) - min(exact) + 1))
    if len(set(values)) == 1:
        return torus.PointLaw(values[0]), grid
    return torus.DiscreteLaw(tuple(values), tuple([1 / len(values)] * len(values))), grid


def cmd_torus_t1(args) -> tuple[dict, int]:
    law, grid = _noise_law(args.noise)
    res = torus.simulate_T1(law, args.samples, args.seed, args.burn_in)
    doc = {
        "noise": args.noise,
        "seed": args.seed,
        "burn_in": args.burn_in,
        "sample_count": args.samples,
        "tolerance": args.tolerance,
        "ks_to_uniform": res.ks,
        "tail_distinct_values": int(len(set(res.tail.tolist()))),
        "_trajectory": res.eta,
    }
    if grid is not None:
        # float steps such as 0.7 drift off the exact orbit, so count grid points instead
        q, bound = grid
        scaled = np.asarray(res.tail, dtype=float) * q
        nodes = np.rint(scaled)
        doc["grid_offset"] = float(np.max(np.abs(scaled - nodes))) if scaled.size else 0.0
        doc["grid_distinct_values"] = int(np.unique(nodes).size)
        ok = doc["grid_offset"] < GRID_SLACK and doc["grid_distinct_values"] <= bound
        doc["expectation"] = f"finite orbit of at most {bound} values"
        reason = "orbit_not_finite"
    else:
        ok = res.ks < args.tolerance
        doc["expectation"] = "uniform on [0, 1)"
        reason = "not_equidistributed"
    return _verdict(doc, ok, reason), EXIT_OK if ok else EXIT_FAIL


def trajectory_csv(eta) -> str:
    return _csv(("k", "eta"), [(k, repr(float(x))) for k, x in enumerate(eta)])


# -------------------------------------------------------------------- main

COMMANDS = {
    "analyze": cmd_analyze,
    "solve": cmd_solve,
    "extremals": cmd_extremals,
    "corpus": cmd_corpus,
    "torus-remark": cmd_torus_stationary,
    "torus-t1": cmd_torus_t1,
}


def _error_doc(command: str, exc: GroupSdeError) -> dict:
    doc = {"command": command, "status": "ERROR", "reason": exc.reason, "message": str(exc)}
    witness = getattr(exc, "witness", None)
    if witness is not None:
        doc["witness"] = witness
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        doc["diagnostics"] = diagnostics
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc, code = COMMANDS[args.command](args)
    except GroupSdeError as exc:
        doc = _error_doc(args.command, exc)
        code = EXIT_INVALID if isinstance(exc, ValidationError) else EXIT_FAIL
        print(f"groupsde {args.command}: {doc['reason']}: {doc['message']}", file=sys.stderr)
        _emit(_dump(doc), args.out)
        return code
    doc["command"] = args.command
    spectrum = doc.pop("_spectrum", None)
    trajectory = doc.pop("_trajectory", None)
    if args.format == "csv":
        if spectrum is not None:
            text = spectrum_csv(spectrum)
        elif trajectory is not None:
            text = trajectory_csv(trajectory)
        elif args.command == "solve":
            text = solve_csv(doc)
        else:
            text = corpus_csv(doc)
        _emit(text, args.out)
    else:
        _emit(_dump(doc), args.out)
    side = getattr(args, "csv", None)
    if side is not None:
        side.write_text(spectrum_csv(spectrum) if spectrum is not None else trajectory_csv(trajectory))
    return code


if __name__ == "__main__":
    sys.exit(main())
