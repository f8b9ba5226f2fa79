"""Command-line front end: ``cubic-lab <subcommand> ...``.

Every subcommand writes its artifacts to ``--out`` under names derived from
the hash of its :class:`RunConfig`, and stamps the hash and tool version into
each file.  Exit codes: 0 success, 1 usage or domain error, 2 partial
failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from ._runtime import config_hash, provenance, write_output
from .model import CutParameter

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_ACCEPT = 0, 1, 2, 3


class UsageError(Exception):
    """Bad arguments or a parameter outside the domain of a command."""


@dataclass
class RunConfig:
    """Serializable description of one run."""

    subcommand: str
    params: dict = field(default_factory=dict)
    tol: float = 1e-9
    basis_cap: int = 1024
    out: str = "cubic-lab-out"
    seed: int = 0
    formats: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["formats"] = list(self.formats)
        # the output directory does not change results
        d.pop("out")
        return d

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _beta(text: str) -> CutParameter:
    try:
        return CutParameter.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _csv_header(cfg: RunConfig) -> str:
    return f"# cubic-lab {__version__}\n# config_hash {cfg.hash}\n# config {json.dumps(cfg.to_dict(), sort_keys=True)}\n"


def _json(cfg: RunConfig, payload: dict) -> str:
    body = {"provenance": provenance(cfg.to_dict())}
    body.update(payload)
    return json.dumps(body, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "tolist"):
        return x.tolist()
    return str(x)


def _svg(cfg: RunConfig, svg: str) -> str:
    stamp = f"<!-- cubic-lab {__version__} config_hash {cfg.hash} -->\n"
    return stamp + svg + "\n"


def _emit(cfg: RunConfig, stem: str, suffix: str, text: str):
    path = write_output(cfg.out, stem, cfg.to_dict(), suffix, text)
    print(path)
    return path


# --- subcommands -------------------------------------------------------------

def cmd_spectrum(args) -> int:
    from .nodes import NodeCountError
    from .spectrum import SpectrumError, boundary_limit, level, levels

    beta = args.beta
    if beta.is_zero:
        raise UsageError("beta = 0 is the harmonic oscillator (E_n = 2n + 1); give a nonzero coupling")
    if args.levels < 1:
        raise UsageError("--levels must be positive")
    cfg = RunConfig("spectrum", {"beta": str(beta), "levels": args.levels, "nodes": not args.no_nodes},
                    args.tol, args.basis_cap, args.out, formats=("csv",))
    rows, failed = [], 0
    if beta.on_cut:
        # boundary value from the side selected by the sign of the argument
        sign = 1 if beta.argument > 0 else -1
        for n in range(args.levels):
            try:
                bv = boundary_limit(beta.modulus, sign, n, args.tol, Nmax=args.basis_cap)
                rows.append(((bv.energy, bv.N, bv.stability, None), None))
            except SpectrumError as exc:
                rows.append((None, f"{type(exc).__name__}: {exc}"))
                failed += 1
    else:
        try:
            found = levels(beta, args.levels, args.tol, verify_nodes=not args.no_nodes)
        except (SpectrumError, NodeCountError):
            found = []
            for n in range(args.levels):
                try:
                    found.append(level(beta, n, args.tol, verify_nodes=not args.no_nodes,
                                       Nmax=args.basis_cap))
                except (SpectrumError, NodeCountError) as exc:
                    found.append(f"{type(exc).__name__}: {exc}")
                    failed += 1
        for lv in found:
            if isinstance(lv, str):
                rows.append((None, lv))
            else:
                rows.append(((lv.energy, lv.N, lv.residual, lv.node_count), None))
    lines = [_csv_header(cfg), "n,re,im,N,residual,nodes,status\n"]
    for n, (row, err) in enumerate(rows):
        if row is None:
            lines.append(f"{n},nan,nan,,,,\"failed: {err}\"\n")
        else:
            E, N, residual, nodes = row
            nodes = "" if nodes is None else nodes
            lines.append(f"{n},{E.real!r},{E.imag!r},{N},{residual:.3e},{nodes},ok\n")
    _emit(cfg, "spectrum", ".csv", "".join(lines))
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_series(args) -> int:
    from .rs_series import growth_fit, rs_coefficients

    if args.n < 0 or args.orders < 1:
        raise UsageError("need n >= 0 and orders >= 1")
    cfg = RunConfig("series", {"n": args.n, "orders": args.orders}, formats=("json",), out=args.out)
    series = rs_coefficients(args.n, args.orders)
    payload = {"series": series.to_dict()}
    if series.K >= 10:
        fit = growth_fit(series)
        payload["growth"] = {"C": fit.C, "D": fit.D, "residual": fit.residual,
                             "ratio_limit": fit.ratio_limit, "monotone_trend": fit.trend_monotone()}
    _emit(cfg, f"series-n{args.n}", ".json", _json(cfg, payload))
    return EXIT_OK


def cmd_pade(args) -> int:
    from .pade import build_pade, evaluate_complex
    from .rs_series import rs_coefficients

    if args.j < 1:
        raise UsageError("--j must be at least 1")
    orders = max(args.orders or 0, 2 * args.j + 1)
    cfg = RunConfig("pade", {"n": args.n, "j": args.j, "orders": orders,
                             "eval": [str(b) for b in args.eval]}, formats=("json",), out=args.out)
    series = rs_coefficients(args.n, orders)
    ap = build_pade(series, args.j)
    evals = []
    for b in args.eval:
        if b.on_cut:
            raise UsageError(f"cannot evaluate on the cut ({b})")
        v = evaluate_complex(ap, b)
        evals.append({"beta": str(b), "re": v.real, "im": v.imag})
    _emit(cfg, f"pade-n{args.n}-j{args.j}", ".json", _json(cfg, {"approximant": ap.to_dict(),
                                                                   "evaluations": evals}))
    return EXIT_OK


def cmd_density(args) -> int:
    from .model import CutParameter as CP
    from .stieltjes_density import (DensityError, density_grid, dispersion_value, moments,
                                    sample_density, small_t_slope, tunneling_fit)

    if not 0 < args.t_min < 10 < 40 <= args.t_max:
        raise UsageError("need 0 < t_min < 10 and t_max >= 40 so the fit window [10, 40] is covered")
    cfg = RunConfig("density", {"n": args.n, "t_min": args.t_min, "t_max": args.t_max},
                    args.tol, formats=("csv", "json"), out=args.out)
    grid = density_grid(args.t_min, args.t_max)
    table = sample_density(args.n, grid, tol=args.tol)
    _emit(cfg, f"density-n{args.n}", ".csv", table.to_csv([f"cubic-lab {__version__}",
                                                           f"config_hash {cfg.hash}"]))
    extra = {}
    status = EXIT_OK if table.ok else EXIT_PARTIAL
    try:
        fit = tunneling_fit(table)
        extra["small_t_slope"] = small_t_slope(table)
        extra["moments"] = [r.to_dict() for r in moments(table, 3, fit)]
        E, res = dispersion_value(table, CP(1.0), fit)
        extra["dispersion_beta_1"] = {"value": E, **res.to_dict()}
    except DensityError as exc:
        fit = None
        extra["error"] = str(exc)
        status = EXIT_PARTIAL
    _emit(cfg, f"density-n{args.n}", ".json", _json(cfg, table.sidecar(fit, extra)))
    return status


def cmd_nodes(args) -> int:
    from .nodes import NodeCountError, contour_svg, count_nodes, locate_zeros, make_evaluator
    from .spectrum import level

    beta = args.beta
    if beta.is_zero or beta.on_cut:
        raise UsageError("node counting needs beta in the open cut plane, beta != 0")
    cfg = RunConfig("nodes", {"beta": str(beta), "n": args.n}, args.tol, formats=("json", "svg"),
                    out=args.out)
    lv = level(beta, args.n, args.tol, verify_nodes=False)
    try:
        nc = count_nodes(lv.coeffs, lv.omega, beta, lv.energy, rotation=lv.rotation)
    except NodeCountError as exc:
        _emit(cfg, f"nodes-n{args.n}", ".json", _json(cfg, {"energy": lv.energy, "error": str(exc)}))
        return EXIT_PARTIAL
    c = nc.contour
    zeros = locate_zeros(make_evaluator(beta, lv.energy), complex(-c.R, c.bottom),
                         complex(c.R, min(c.top, -1e-9)))
    payload = {"energy": lv.energy, "count": nc.to_dict(), "zeros": [complex(z) for z in zeros]}
    _emit(cfg, f"nodes-n{args.n}", ".json", _json(cfg, payload))
    _emit(cfg, f"nodes-n{args.n}", ".svg", _svg(cfg, contour_svg(nc, zeros)))
    return EXIT_OK if nc.count == args.n else EXIT_PARTIAL


def cmd_wkb(args) -> int:
    from .model import make_frame
    from .wkb import diagram_svg, identify_zero_line, point_on_line, trace_diagram, zero_density

    lam = complex(args.lam_re, args.lam_im)
    if abs(abs(lam) - 1) > 1e-12 or lam.real <= 0:
        raise UsageError("lambda must lie on the unit circle with positive real part")
    if args.b <= 0:
        raise UsageError("b must be positive")
    cfg = RunConfig("wkb", {"b": args.b, "lam": [lam.real, lam.imag], "distance": args.distance,
                            "drop_h_terms": True}, formats=("json", "svg"), out=args.out)
    frame = make_frame("energy-dominant", lam, CutParameter(args.b))
    diagram = trace_diagram(frame, lam, drop_h_terms=True)
    tp, line, sector = identify_zero_line(diagram)
    y0 = point_on_line(diagram, line, args.distance)
    est = zero_density(args.b, lam, y0, frame.h, y_plus=tp)
    payload = {"diagram": diagram.to_dict(), "zero_line_turning_point": tp,
               "zero_line_departure": line.departure, "sector": sector.to_dict(),
               "density": est.to_dict()}
    _emit(cfg, "wkb", ".json", _json(cfg, payload))
    _emit(cfg, "wkb", ".svg", _svg(cfg, diagram_svg(diagram)))
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import CRITERIA, run

    if args.profile != "desk":
        raise UsageError("the only profile is 'desk'")
    numbers = sorted(CRITERIA)
    if args.only:
        try:
            numbers = sorted({int(k) for k in args.only.split(",")})
        except ValueError as exc:
            raise UsageError(f"--only expects comma-separated integers: {exc}") from exc
        bad = [k for k in numbers if k not in CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    cfg = RunConfig("accept", {"profile": args.profile, "criteria": numbers}, formats=("json",),
                    out=args.out)
    results = []
    for k in numbers:
        r = run([k])[0]
        print(r.line(), flush=True)
        results.append(r)
    # timings go to stdout only, keeping the report reproducible
    payload = {"criteria": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results],
               "all_passed": all(r.passed for r in results)}
    _emit(cfg, "acceptance", ".json", _json(cfg, payload))
    return EXIT_OK if payload["all_passed"] else EXIT_ACCEPT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cubic-lab", description="Spectral toolkit for -d^2/dx^2 + x^2 + i sqrt(beta) x^3.")
    p.add_argument("--version", action="version", version=f"cubic-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, tol=True):
        sp.add_argument("--out", default="cubic-lab-out", help="output directory")
        if tol:
            sp.add_argument("--tol", type=float, default=1e-9, help="relative truncation tolerance")

    sp = sub.add_parser("spectrum", help="converged levels at one coupling (CSV)")
    sp.add_argument("--beta", type=_beta, required=True, help='coupling "MOD@ARG", e.g. 1.0@0 or 1.0@pi')
    sp.add_argument("--levels", type=int, default=4, help="number of lowest levels")
    sp.add_argument("--no-nodes", action="store_true", help="skip node-count labeling")
    sp.add_argument("--basis-cap", type=int, default=1024, help="largest Hermite basis size")
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("series", help="exact perturbation coefficients (JSON)")
    sp.add_argument("--n", type=int, default=0, help="level index")
    sp.add_argument("--orders", type=int, default=20, help="number of coefficients")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_series)

    sp = sub.add_parser("pade", help="diagonal Pade approximant (JSON)")
    sp.add_argument("--n", type=int, default=0, help="level index")
    sp.add_argument("--j", type=int, default=8, help="diagonal Pade index j")
    sp.add_argument("--orders", type=int, default=None, help="series orders (at least 2j + 1)")
    sp.add_argument("--eval", type=_beta, action="append", default=[], help="evaluation point MOD@ARG")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_pade)

    sp = sub.add_parser("density", help="cut density table (CSV + JSON sidecar)")
    sp.add_argument("--n", type=int, default=0, help="level index")
    sp.add_argument("--t-min", type=float, default=1e-3, help="smallest grid point")
    sp.add_argument("--t-max", type=float, default=40.0, help="largest grid point")
    common(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("nodes", help="node count and zeros of one eigenfunction (JSON + SVG)")
    sp.add_argument("--beta", type=_beta, required=True, help="coupling MOD@ARG off the cut")
    sp.add_argument("--n", type=int, default=0, help="level index")
    common(sp)
    sp.set_defaults(func=cmd_nodes)

    sp = sub.add_parser("wkb", help="anti-Stokes diagram and zero density (JSON + SVG)")
    sp.add_argument("--b", type=float, default=1.0, help="modulus of the coupling on the cut")
    sp.add_argument("--lam-re", type=float, default=1.0, help="real part of the scaled energy")
    sp.add_argument("--lam-im", type=float, default=0.0, help="imaginary part of the scaled energy")
    sp.add_argument("--distance", type=float, default=0.05, help="distance along the zero line")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_wkb)

    sp = sub.add_parser("accept", help="run the acceptance criteria")
    sp.add_argument("--profile", default="desk", choices=["desk"], help="runtime profile")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cubic-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
