"""Command-line front end: ``mdisc <command> ...``.

Every command prints one JSON report on stdout. Diagnostics go to stderr.
Exit codes: 0 success, 1 file or usage error, 2 validation failure,
3 no scheme under the requested mode.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, distance, formats, general_schemes, qubit_schemes, simulator, tolerances
from .apparatus import (InvalidMeasurement, ProjectiveMeasurement, QubitPair, canonical_frame,
                        correlation_unitary, qubit_observable_basis, validate)

EXIT_OK, EXIT_FILE, EXIT_INVALID, EXIT_NO_SCHEME = 0, 1, 2, 3
QUBIT_LABELS = ("+1", "-1")


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CommandError(EXIT_FILE, f"cannot read {path}: {exc.strerror}") from None


def _digest(blobs) -> str:
    h = hashlib.sha256()
    for b in blobs:
        h.update(hashlib.sha256(b).digest())
    return h.hexdigest()


def _load_apparatus(path: str, blobs: list) -> ProjectiveMeasurement:
    raw = _read(path)
    blobs.append(raw)
    try:
        return formats.parse_apparatus(raw.decode("utf-8"))
    except formats.FormatError as exc:
        raise CommandError(EXIT_FILE, f"{path}: {exc}") from None
    except InvalidMeasurement as exc:
        raise CommandError(EXIT_INVALID, f"{path}: invalid measurement: {exc}") from None


def _write(path: str, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CommandError(EXIT_FILE, f"cannot write {path}: {exc.strerror}") from None


def _qubit_pair(m: ProjectiveMeasurement, n: ProjectiveMeasurement):
    if m.dim == 2 and m.is_von_neumann() and n.is_von_neumann() and m.labels == n.labels:
        return canonical_frame(m, n)[0]
    return None


def scheme_summary(scheme) -> dict:
    out = {"kind": scheme.kind, "uses": scheme.uses, "dims": list(scheme.dims)}
    if hasattr(scheme, "n"):
        out["n"] = scheme.n
    out["exact_accuracy"] = {t: simulator.exact_accuracy(scheme, t) for t in simulator.HYPOTHESES}
    return out


# --- commands ---------------------------------------------------------------

def cmd_validate(args, blobs):
    raw = _read(args.file)
    blobs.append(raw)
    try:
        data = formats._loads(raw.decode("utf-8"))
        m = formats.apparatus_from_dict(data, check=False)
    except formats.FormatError as exc:
        raise CommandError(EXIT_FILE, f"{args.file}: {exc}") from None
    violations = validate(m)
    result = {"valid": not violations, "dim": m.dim, "labels": list(m.labels),
              "violations": [{"kind": v.kind, "detail": v.detail, "deviation": v.deviation}
                             for v in violations]}
    if not violations:
        result["ranks"] = list(m.ranks())
    return result, EXIT_INVALID if violations else EXIT_OK


def cmd_correlation(args, blobs):
    m = _load_apparatus(args.m, blobs)
    n = _load_apparatus(args.n, blobs)
    if not (m.is_von_neumann() and n.is_von_neumann()):
        raise CommandError(EXIT_INVALID, "correlation needs two von Neumann (rank-one) measurements")
    cu = correlation_unitary(m.as_von_neumann(), n.as_von_neumann())
    result = {"matrix": formats.encode_array(cu.matrix), "labels_m": list(cu.labels_m),
              "labels_n": list(cu.labels_n)}
    pair = _qubit_pair(m, n)
    if pair is not None:
        result["theta"] = pair.theta
        result["phi"] = pair.phi
    return result, EXIT_OK


def _plan_simple(m, n):
    pair = _qubit_pair(m, n)
    if pair is None:
        return None, "simple schemes are built for pairs of qubit observables"
    scheme = qubit_schemes.find_simple_scheme(pair)
    if scheme is None:
        return None, f"no simple scheme with at most {qubit_schemes.N_MAX} uses at theta = {pair.theta}"
    return qubit_schemes.realize(scheme, m, n), None


def _plan_mm(m, n):
    pair = _qubit_pair(m, n)
    if pair is None:
        return None, "M-M schemes are built for pairs of qubit observables"
    if pair.theta >= math.pi - tolerances.current().angle:
        return None, "at theta = pi a one-use simple scheme applies"
    return qubit_schemes.realize(qubit_schemes.build_mm_optimal(pair), m, n), None


def _plan_general(m, n):
    try:
        plan = general_schemes.plan_general(m, n)
    except ValueError as exc:
        return None, str(exc)
    return plan, None


def cmd_plan(args, blobs):
    m = _load_apparatus(args.m, blobs)
    n = _load_apparatus(args.n, blobs)
    if m.labels != n.labels or m.dim != n.dim:
        raise CommandError(EXIT_INVALID, "M and N need the same dimension and outcome labels")
    modes = ["simple", "mm", "mum"] if args.scheme == "auto" else [args.scheme]
    builders = {"simple": _plan_simple, "mm": _plan_mm, "mum": _plan_general}
    reasons = {}
    for mode in modes:
        built, reason = builders[mode](m, n)
        if built is None:
            reasons[mode] = reason
            continue
        result = {"mode": mode}
        scheme = built
        if mode == "mum":
            result["variant"] = general_schemes.variant_name(built)
            result["apparatus_uses"] = general_schemes.plan_uses(built)
            if isinstance(built, general_schemes.LiftedMUM):
                result["copies"] = built.copies
            scheme = built.scheme
        result["scheme"] = scheme_summary(scheme)
        pair = _qubit_pair(m, n)
        if pair is not None:
            result["theta"] = pair.theta
        if args.out:
            _write(args.out, formats.serialize_scheme(scheme))
            result["out"] = args.out
        return result, EXIT_OK
    raise CommandError(EXIT_NO_SCHEME, "; ".join(f"{k}: {v}" for k, v in reasons.items()))


def cmd_simulate(args, blobs):
    raw = _read(args.scheme)
    blobs.append(raw)
    try:
        scheme = formats.parse_scheme(raw.decode("utf-8"))
    except formats.FormatError as exc:
        raise CommandError(EXIT_FILE, f"{args.scheme}: {exc}") from None
    except InvalidMeasurement as exc:
        raise CommandError(EXIT_INVALID, f"{args.scheme}: invalid measurement: {exc}") from None
    stats = simulator.evaluate(scheme, args.trials, args.seed, workers=args.workers)
    return {"kind": scheme.kind, "stats": stats.as_dict()}, EXIT_OK


def cmd_distance(args, blobs):
    m = _load_apparatus(args.m, blobs)
    n = _load_apparatus(args.n, blobs)
    if m.labels != n.labels or m.dim != n.dim:
        raise CommandError(EXIT_INVALID, "M and N need the same dimension and outcome labels")
    kw = {"seed": args.seed} if args.measure in ("fmin", "fstab") else {}
    report = distance.distance(m, n, args.measure, **kw)
    result = report.as_dict()
    result["witness"] = formats.encode_array(report.witness)
    return result, EXIT_OK


def cmd_qubit(args, blobs):
    if not 0 < args.theta <= math.pi:
        raise CommandError(EXIT_INVALID, "theta must lie in (0, pi]")
    s = ProjectiveMeasurement.from_basis(np.eye(2), QUBIT_LABELS)
    t = ProjectiveMeasurement.from_basis(qubit_observable_basis(args.theta, args.phi), QUBIT_LABELS)
    paths = {"S": f"{args.out_prefix}_S.json", "T": f"{args.out_prefix}_T.json"}
    _write(paths["S"], formats.serialize_apparatus(s, name="S", description="sigma_z"))
    _write(paths["T"], formats.serialize_apparatus(
        t, name="T", description=f"Bloch angle {args.theta!r}, phase {args.phi!r} from sigma_z"))
    return {"theta": args.theta, "phi": args.phi, "files": paths}, EXIT_OK


def cmd_search_simple(args, blobs):
    if not 0 < args.theta <= math.pi:
        raise CommandError(EXIT_INVALID, "theta must lie in (0, pi]")
    pair = QubitPair(args.theta)
    subset = qubit_schemes.search_simple_submatrix(pair, args.n)
    if subset is None:
        raise CommandError(EXIT_NO_SCHEME,
                           f"no singular principal submatrix for n = {args.n} at theta = {args.theta}")
    xi = qubit_schemes.simple_state_from_subset(pair, args.n, subset)
    ok, worst = qubit_schemes.check_simple_state(xi, pair, args.n)
    return {"theta": args.theta, "n": args.n, "subset": list(subset),
            "state": formats.encode_array(xi), "nullifies": ok, "max_diagonal": worst}, EXIT_OK


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdisc", description="Perfect identification of projective measurements.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check an apparatus file")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("correlation", help="correlation unitary of two von Neumann measurements")
    s.add_argument("m")
    s.add_argument("n")
    s.set_defaults(func=cmd_correlation)

    s = sub.add_parser("plan", help="build an identification scheme")
    s.add_argument("m")
    s.add_argument("n")
    s.add_argument("--scheme", choices=("auto", "simple", "mm", "mum"), default="auto")
    s.add_argument("--out", help="write the scheme file here")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="Monte-Carlo evaluation of a scheme file")
    s.add_argument("scheme")
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("distance", help="distance or fidelity between two apparatus")
    s.add_argument("m")
    s.add_argument("n")
    s.add_argument("--measure", choices=distance.MEASURES, default="dmax")
    s.add_argument("--seed", type=int, default=0, help="multistart seed for fidelities")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("qubit", help="write canonical qubit apparatus files")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_qubit)

    s = sub.add_parser("search-simple", help="singular principal submatrix search")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_search_simple)
    return p


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tolerances.profile_from_env()
    except ValueError as exc:
        print(f"mdisc: {exc}", file=sys.stderr)
        return EXIT_FILE
    blobs: list = []
    try:
        result, code = args.func(args, blobs)
    except CommandError as exc:
        print(f"mdisc {args.command}: {exc}", file=sys.stderr)
        result, code = {"error": str(exc)}, exc.code
    report = {"command": _echo(args), "inputs_digest": _digest(blobs), "results": result,
              "tolerance_profile": tolerances.current_name(),
              "tolerances": tolerances.current().as_dict(),
              "seed": getattr(args, "seed", None)}
    print(json.dumps(report, indent=1))
    return code


if __name__ == "__main__":
    sys.exit(main())
