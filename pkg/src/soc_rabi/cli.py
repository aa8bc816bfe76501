"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 numerical failure. Errors are
reported as a JSON document on standard error.
"""

import argparse
import json
import sys

from . import jc, oracle, polaron, qfi, sweep
from .errors import InputError, NumericalError
from .units import (
    DEFAULT_ELECTRON_MASS,
    DEFAULT_G_FACTOR,
    DEFAULT_MASS_RATIO,
    PAPER_ANCHOR,
    REFERENCE_B,
    FieldPoint,
    MaterialSpec,
    SocStrengths,
    coupling_per_velocity,
    map_parameters,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _common(p):
    p.add_argument("--g-factor", type=float, default=DEFAULT_G_FACTOR)
    p.add_argument("--electron-mass", type=float, default=DEFAULT_ELECTRON_MASS, help="kg")
    p.add_argument("--mass-ratio", type=float, default=DEFAULT_MASS_RATIO, help="m / m0")
    p.add_argument("--B", type=float, default=REFERENCE_B, help="field in tesla")
    p.add_argument("--alpha", type=float, default=0.0, help="Rashba strength, m/s")
    p.add_argument("--beta", type=float, default=0.0, help="Dresselhaus strength, m/s")
    p.add_argument(
        "--paper-anchored",
        action="store_true",
        help="use Ea=1.35e9, Eb=1.70e9 rad/s at 0.01 T (scaled with B) instead of the mass formulas",
    )
    p.add_argument("--source", choices=["approx", "oracle"], default="approx")
    p.add_argument("--truncation", type=int, default=None, help="Fock levels; automatic if omitted")
    p.add_argument("--fd-step", type=float, default=None, help="finite-difference step in tesla")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--workers", type=int, default=1)


def _grid_flags(p):
    p.add_argument("--alpha-range", nargs=3, type=float, default=[0.0, 1000.0, 101],
                   metavar=("MIN", "MAX", "COUNT"))
    p.add_argument("--beta-range", nargs=3, type=float, default=[0.0, 100.0, 101],
                   metavar=("MIN", "MAX", "COUNT"))


def build_parser():
    parser = _Parser(prog="soc-rabi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    help_ = {
        "map": "mapped anisotropic Rabi parameters",
        "jc": "closed-form spectrum for beta = 0",
        "xi": "solve the displacement condition",
        "spectrum": "transformed parameters and approximate spectrum",
        "oracle": "exact low-lying eigenpairs",
        "qfi": "quantum Fisher information of the ground state",
        "point": "full single-point report",
        "scan-xi": "xi over an (alpha, beta) grid, CSV",
        "scan-gap": "signed gap over a grid, CSV",
        "scan-qfi": "ground-state QFI over a grid, CSV",
        "find-crossing": "bisect the crossing alpha at fixed beta",
    }
    cmds = {}
    for name, text in help_.items():
        cmds[name] = sub.add_parser(name, help=text)
        _common(cmds[name])
    cmds["oracle"].add_argument("--k", type=int, default=4, help="number of eigenpairs")
    cmds["oracle"].add_argument("--with-amplitudes", action="store_true")
    cmds["qfi"].add_argument(
        "--method", choices=["ground", "analytic-g1", "fidelity"], default="ground",
        help="ground: overlap FD on the --source family; analytic-g1: 4|dxi/dB|^2; "
             "fidelity: fidelity susceptibility of the approximate family",
    )
    cmds["point"].add_argument("--with-oracle", action="store_true")
    for name in ("scan-xi", "scan-gap", "scan-qfi"):
        _grid_flags(cmds[name])
    cmds["find-crossing"].add_argument("--bracket", nargs=2, type=float, default=[0.0, 1000.0],
                                       metavar=("LO", "HI"), help="alpha bracket, m/s")
    return parser


def _material(args):
    return MaterialSpec(args.g_factor, args.electron_mass, args.mass_ratio)


def _anchor(args):
    return PAPER_ANCHOR if args.paper_anchored else None


def _options(args, tol_default=polaron.DEFAULT_TOL):
    return sweep.SweepOptions(
        source=args.source,
        truncation=args.truncation,
        fd_step=args.fd_step,
        tol=tol_default if args.tol is None else args.tol,
    )


def _params(args):
    return map_parameters(_material(args), FieldPoint(args.B), SocStrengths(args.alpha, args.beta), _anchor(args))


def _grid(args):
    return sweep.SweepGrid(
        alpha_range=tuple(args.alpha_range),
        beta_range=tuple(args.beta_range),
        B=args.B,
        material=_material(args),
        anchor=_anchor(args),
        options=_options(args),
    )


def _json(doc):
    return sweep.dumps(doc) + "\n"


def run(args) -> str:
    cmd = args.command
    if cmd in ("scan-xi", "scan-gap", "scan-qfi"):
        fn = {"scan-xi": sweep.scan_xi, "scan-gap": sweep.scan_gap, "scan-qfi": sweep.scan_qfi}[cmd]
        return fn(_grid(args), workers=args.workers)
    if cmd == "find-crossing":
        tol = 1e-3 if args.tol is None else args.tol
        point = sweep.find_crossing(
            args.beta, tuple(args.bracket), args.source, tol, args.B, _material(args), _anchor(args),
            sweep.SweepOptions(source=args.source, truncation=args.truncation),
        )
        doc = sweep.CrossingBoundary((point,), tol).to_dict()
        if args.beta == 0:
            doc["analytic_alpha_c"] = sweep.analytic_crossing_alpha(args.B, _material(args), _anchor(args))
        return _json(doc)

    params = _params(args)
    tol = polaron.DEFAULT_TOL if args.tol is None else args.tol
    if cmd == "map":
        doc = params.to_dict()
        doc["coupling_per_velocity"] = coupling_per_velocity(args.B)
        return _json(doc)
    if cmd == "jc":
        spec = jc.jc_spectrum(params)
        doc = spec.to_dict()
        doc["ground_branch"] = jc.jc_ground_branch(params).value
        return _json(doc)
    if cmd == "xi":
        return _json(polaron.solve_xi(params, tol).to_dict())
    if cmd == "spectrum":
        xi, tp, spec = polaron.solve_point(params, tol)
        return _json({"xi": xi.to_dict(), "transformed": tp.to_dict(), "approx_spectrum": spec.to_dict()})
    if cmd == "oracle":
        if args.truncation is None:
            N = oracle.converge_truncation(params).truncation
        else:
            N = args.truncation
        spec = oracle.exact_spectrum(params, N, min(args.k, 2 * N))
        doc = spec.to_dict()
        if not args.with_amplitudes:
            doc.pop("amplitudes")
        return _json(doc)
    if cmd == "qfi":
        soc = SocStrengths(args.alpha, args.beta)
        step = qfi.default_step(args.B) if args.fd_step is None else args.fd_step
        if args.method == "analytic-g1":
            res = qfi.qfi_analytic_g1(_material(args), soc, args.B, step, _anchor(args))
        elif args.method == "fidelity":
            family = qfi.approx_stencil_family(_material(args), soc, args.B, step, _anchor(args), args.truncation)
            res = qfi.qfi_fidelity_susceptibility(family, args.B, step)
        else:
            res = qfi.qfi_ground(_material(args), soc, args.B, step, args.source, _anchor(args), args.truncation)
        return _json(res.to_dict())
    if cmd == "point":
        doc = sweep.point_query(
            _material(args), args.B, args.alpha, args.beta, _options(args), _anchor(args), args.with_oracle
        )
        return _json(doc)
    raise InputError(f"unknown command {cmd!r}")


def _fail(exc, code):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise InputError(f"--workers must be >= 1, got {args.workers}")
        out = run(args)
    except InputError as exc:
        return _fail(exc, EXIT_INPUT)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
