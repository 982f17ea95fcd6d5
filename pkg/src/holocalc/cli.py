"""Batch command line front end with JSON in and out.

Exit codes: 0 success, 1 malformed JSON, 2 precondition or dimension
error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .calib import Calibration, norm_P
from .contour import Domain
from .errors import ConvergenceError, DimensionError, PreconditionError
from .funcalc import apply_funcalc
from .holofun import parse_function
from .perturb import is_quasinilpotent, perturbation_series
from .projections import spectral_projection
from .renorm import (
    classify_spectrum,
    renorm_bounded,
    renorm_spectral,
    spectrum_coincidence,
    spectrum_intersection_check,
)
from .spectral import eigen_radius, eigenvalues, resolvent_direct, spectral_radius, verify_resolvent_identities
from .suites import SUITES, run_suite

EXIT_OK, EXIT_JSON, EXIT_PRECONDITION, EXIT_CONVERGENCE = 0, 1, 2, 3


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holocalc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_T=True):
        if needs_T:
            p.add_argument("--T", required=True, help="operator JSON {dim, re, im}")
            p.add_argument("--calib", help="calibration JSON (default: max-norm)")
        p.add_argument("--tol", type=_positive(float), default=1e-12)
        p.add_argument("--nmax", type=_positive(int), default=60)
        p.add_argument("--gap", type=_positive(float), default=None)
        p.add_argument("--nodes", type=_positive(int), default=128)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write JSON here instead of stdout")
        return p

    common(sub.add_parser("radius", help="spectral radius three ways"))
    common(sub.add_parser("spectrum", help="eigenvalues and the spectrum pathways"))
    p = common(sub.add_parser("resolvent", help="R(lambda, T), its identities, optional norm landscape"))
    p.add_argument("--lam", type=_complex, help="point, e.g. 2+1j")
    p.add_argument("--grid", help="x0,x1,y0,y1,nx,ny for the ||R||_P landscape")
    p.add_argument("--csv", help="CSV path for the landscape (re, im, norm)")
    p = common(sub.add_parser("funcalc", help="f(T) by contour quadrature"))
    p.add_argument("--f", required=True, help="function spec, e.g. exp, poly:1,0,2, rat:1/-5,1")
    p = common(sub.add_parser("project", help="Riesz projection onto eigenvalue clusters"))
    p.add_argument("--set", required=True, help="comma-separated cluster indices")
    p = common(sub.add_parser("perturb", help="f(T + S) as a series in S"))
    p.add_argument("--S", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--domain", required=True, help='JSON {"disks": [{"c": [re, im], "r": r}]}')
    p = common(sub.add_parser("renorm", help="renormed calibration"))
    p.add_argument("--mode", choices=("lb1", "gi2"), required=True)
    p.add_argument("--mu", type=_positive(float), help="gi2 contraction level (default 1.5 r)")
    p.add_argument("--p0", type=int, help="lb1 witness member")
    common(sub.add_parser("classify", help="point and approximate point spectrum with witnesses"))
    p = common(sub.add_parser("intersect", help="witness calibrations for lambdas off the spectrum"))
    p.add_argument("--lambdas", required=True, help="JSON list of [re, im] pairs or numbers")
    p = common(sub.add_parser("verify", help="run an invariant suite"), needs_T=False)
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--count", type=_positive(int), help="number of instances (suite default if omitted)")
    return ap


def _load_operator(path, dim=None):
    A = io.operator_from_json(io.load_json(path))
    if dim is not None and A.shape[0] != dim:
        raise DimensionError(f"operator in {path} has dim {A.shape[0]}, expected {dim}")
    return A


def _load_calib(args, n: int) -> Calibration:
    if not args.calib:
        return Calibration.uniform(n)
    P = io.calibration_from_json(io.load_json(args.calib))
    if P.dim != n:
        raise DimensionError(f"calibration dim {P.dim} does not match operator dim {n}")
    return P


def _lambdas(path) -> np.ndarray:
    data = io.load_json(path)
    out = []
    for z in data:
        if isinstance(z, dict):
            out.append(complex(z["re"], z.get("im", 0.0)))
        elif isinstance(z, (list, tuple)):
            out.append(complex(*z))
        else:
            out.append(complex(z))
    return np.array(out, dtype=complex)


def _config(args) -> dict:
    keys = ("tol", "nmax", "gap", "nodes", "seed", "mode", "mu", "p0", "f", "set", "lam", "suite", "count")
    cfg = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if "lam" in cfg:
        cfg["lam"] = {"re": cfg["lam"].real, "im": cfg["lam"].imag}
    return cfg


def _cmd_radius(args, T, P):
    est = spectral_radius(P, T, args.nmax)
    out = est.to_dict()
    out["inf_form"] = est.certified
    out["quasinilpotent"] = is_quasinilpotent(P, T, args.nmax)
    return out


def _cmd_spectrum(args, T, P):
    return {"eigen": eigenvalues(T).to_dict(), "pathways": spectrum_coincidence(P, T)}


def _cmd_resolvent(args, T, P):
    out = {}
    if args.lam is not None:
        R = resolvent_direct(T, args.lam)
        eigs = np.linalg.eigvals(T)
        mu = args.lam + 0.5 * float(np.min(np.abs(eigs - args.lam)))
        out["resolvent"] = io.operator_to_json(R)
        out["norm_P"] = norm_P(P, R, atol=1e-13 * max(1.0, float(np.max(np.abs(R)))))
        out["identities"] = verify_resolvent_identities(T, args.lam, mu, 1)
    if args.grid:
        try:
            x0, x1, y0, y1, nx, ny = args.grid.split(",")
            xs = np.linspace(float(x0), float(x1), int(nx))
            ys = np.linspace(float(y0), float(y1), int(ny))
        except ValueError:
            raise PreconditionError("--grid needs x0,x1,y0,y1,nx,ny") from None
        eigs = np.linalg.eigvals(T)
        rows = []
        for y in ys:
            for x in xs:
                lam = complex(x, y)
                try:
                    R = resolvent_direct(T, lam)
                    v = norm_P(P, R, atol=1e-13 * max(1.0, float(np.max(np.abs(R)))))
                except PreconditionError:
                    v = float("inf")
                rows.append((x, y, v))
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["re", "im", "norm_R_P"])
                w.writerows((repr(float(x)), repr(float(y)), repr(float(v))) for x, y, v in rows)
        out["landscape"] = {"points": len(rows), "csv": args.csv, "max_finite": max(
            (v for *_, v in rows if np.isfinite(v)), default=None), "eigenvalues": io.complex_list(eigs)}
    if not out:
        raise PreconditionError("resolvent needs --lam or --grid")
    out["provenance"] = {"resolvent": "LU solve of lambda I - T", "norm_P": "max_p p^(R), closed form",
                         "landscape": "max_p p^(R(lambda,T)) on the grid"}
    return out


def _cmd_funcalc(args, T, P):
    from .funcalc import default_contour

    f = parse_function(args.f)
    return apply_funcalc(P, T, f, default_contour(T, f, args.nodes), args.tol).to_dict()


def _cmd_project(args, T, P):
    try:
        H = [int(s) for s in args.set.split(",") if s.strip()]
    except ValueError:
        raise PreconditionError(f"--set must be comma-separated integers, got {args.set!r}") from None
    gap = args.gap if args.gap is not None else _default_gap(T)
    return spectral_projection(P, T, H, gap, args.tol).to_dict()


def _default_gap(T) -> float:
    eigs = np.linalg.eigvals(T)
    return 1e-6 * max(1.0, float(np.max(np.abs(eigs))))


def _cmd_perturb(args, T, P):
    S = _load_operator(args.S, T.shape[0])
    try:
        D = Domain.from_dict(io.load_json(args.domain))
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed domain JSON: {exc}") from None
    return perturbation_series(P, T, S, parse_function(args.f), D, args.tol).to_dict()


def _cmd_renorm(args, T, P):
    if args.mode == "lb1":
        return renorm_bounded(P, T, args.p0).to_dict()
    mu = args.mu if args.mu is not None else 1.5 * eigen_radius(T)
    return renorm_spectral(P, T, mu, seed=args.seed).to_dict()


def _cmd_classify(args, T, P):
    return classify_spectrum(P, T, tol=1e-9, seed=args.seed).to_dict()


def _cmd_intersect(args, T, P):
    return spectrum_intersection_check(P, T, _lambdas(args.lambdas), seed=args.seed)


def _cmd_verify(args):
    kw = {"count": args.count} if args.count else {}
    return run_suite(args.suite, args.seed, **kw)


COMMANDS = {
    "radius": _cmd_radius,
    "spectrum": _cmd_spectrum,
    "resolvent": _cmd_resolvent,
    "funcalc": _cmd_funcalc,
    "project": _cmd_project,
    "perturb": _cmd_perturb,
    "renorm": _cmd_renorm,
    "classify": _cmd_classify,
    "intersect": _cmd_intersect,
}


def _execute(args) -> tuple[int, str]:
    try:
        if args.command == "verify":
            result = _cmd_verify(args)
        else:
            T = _load_operator(args.T)
            P = _load_calib(args, T.shape[0])
            result = COMMANDS[args.command](args, T, P)
    except json.JSONDecodeError as exc:
        return EXIT_JSON, io.dumps({"error": "malformed_json", "message": str(exc)})
    except (PreconditionError, FileNotFoundError, IsADirectoryError) as exc:
        return EXIT_PRECONDITION, io.dumps({"error": type(exc).__name__, "message": str(exc)})
    except ConvergenceError as exc:
        return EXIT_CONVERGENCE, io.dumps({"error": "ConvergenceError", "message": str(exc)})
    return EXIT_OK, io.dumps({"command": args.command, "config": _config(args), "result": result})


def run(argv=None) -> tuple[int, str]:
    """Execute one command; returns (exit code, JSON text)."""
    return _execute(build_parser().parse_args(argv))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, text = _execute(args)
    if code == EXIT_OK and args.out:
        Path(args.out).write_text(text + "\n")
    else:
        (sys.stdout if code == EXIT_OK else sys.stderr).write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
