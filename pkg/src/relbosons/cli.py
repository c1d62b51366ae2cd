"""Command-line front door.

Subcommands: ``density`` (radial charge/energy scan plus planar map),
``potential`` (effective potential curves), ``gamma`` (uncertainty-bound
sweeps over the relativity parameter), ``rayleigh`` (dispersion
functionals and the transverse minimization), ``verify`` (the anchored
self-check table).

Output files are written atomically (temp file + rename) and floats are
printed with 9 significant digits, so repeated runs with identical flags
and seed produce byte-identical files.  RELBOSONS_THREADS caps the
worker count of the gamma sweep.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import eigensolver, kg_fields, potentials, variational, verify
from .potentials import INFINITY, PotentialSpec


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.9g}"


def atomic_write(path: str, text: str) -> None:
    """Write via a sibling temp file and rename; never a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".relbosons-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def parse_d_list(text: str):
    """Comma list of d values; the token 'inf' maps to the exact limit."""
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        if tok in ("inf", "infinity"):
            out.append(INFINITY)
        else:
            val = float(tok)
            if val < 0:
                raise argparse.ArgumentTypeError("d values must be nonnegative")
            out.append(val)
    if not out:
        raise argparse.ArgumentTypeError("no d values given")
    return out


def parse_range(text: str):
    """'min:max:step' range specification for q grids."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected min:max:step")
    lo, hi, step = (float(p) for p in parts)
    if not (0 < lo < hi) or step <= 0:
        raise argparse.ArgumentTypeError("need 0 < min < max and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


@dataclass
class RunConfig:
    """One validated invocation: subcommand plus its parsed flags."""

    subcommand: str
    out: str = ""
    fmt: str = "csv"
    seed: int = 0
    options: dict = dc_field(default_factory=dict)

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        options = vars(args).copy()
        return cls(subcommand=options.pop("subcommand"),
                   out=options.get("out", "") or "",
                   fmt=options.get("fmt", "csv"),
                   seed=options.get("seed", 0),
                   options=options)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relbosons",
        description="Uncertainty bounds for relativistic bosons: densities, "
                    "potentials, gamma sweeps, dispersion minimization.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_dens = sub.add_parser(
        "density", help="radial charge/energy density scan (CSV r,rho,eps)")
    p_dens.add_argument("--m", type=float, default=1.0, help="mass (natural units)")
    p_dens.add_argument("--a", type=float, default=0.5, help="damping parameter a")
    p_dens.add_argument("--t", type=float, default=0.05, help="time t")
    p_dens.add_argument("--rmax", type=float, default=6.0)
    p_dens.add_argument("--dr", type=float, default=0.01)
    p_dens.add_argument("--profile", choices=["cosine", "gaussian"], default="cosine",
                        help="spectral profile f(p)")
    p_dens.add_argument("--sigma", type=float, default=1.0,
                        help="width of the gaussian profile")
    p_dens.add_argument("--out", required=True, help="CSV output (r,rho,eps)")
    p_dens.add_argument("--map-out", default="", help="planar map CSV (x,z,rho)")
    p_dens.add_argument("--map-n", type=int, default=121,
                        help="points per axis of the planar map")
    p_dens.add_argument("--shells-out", default="",
                        help="negative-shell JSON ([{r_min,r_max,rho_min}])")

    p_pot = sub.add_parser(
        "potential", help="effective potential curves (CSV q,W; d,q,W for sweeps)")
    p_pot.add_argument("--spin", type=int, choices=[0, 1], required=True)
    p_pot.add_argument("--d", type=parse_d_list, default=None,
                       help="comma list of d values; 'inf' allowed "
                            "(default sweep 0,0.5,1,2,inf)")
    p_pot.add_argument("--l", type=int, default=0, help="angular index")
    p_pot.add_argument("--q", type=parse_range, default=None,
                       help="q grid as min:max:step (default 0.05:6:0.05)")
    p_pot.add_argument("--out", required=True)

    p_gam = sub.add_parser(
        "gamma", help="gamma(d) sweep (CSV d,gamma,residual,method)")
    p_gam.add_argument("--spin", type=int, choices=[0, 1], required=True)
    p_gam.add_argument("--channel", choices=["scalar", "longitudinal"], default=None,
                       help="defaults to the channel of the chosen spin")
    p_gam.add_argument("--d", type=parse_d_list, required=True)
    p_gam.add_argument("--l", type=int, default=0)
    p_gam.add_argument("--grid-n", type=int, default=8000)
    p_gam.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    p_gam.add_argument("--out", default="", help="output file (stdout if omitted)")

    p_ray = sub.add_parser(
        "rayleigh", help="dispersion functional evaluation / minimization (JSON)")
    p_ray.add_argument("--case", required=True,
                       choices=["spin0", "long", "trans-nonrel", "trans-massless"])
    p_ray.add_argument("--d", type=parse_d_list, default=None,
                       help="single d for the spin0/long cases")
    p_ray.add_argument("--out", default="", help="JSON output (stdout if omitted)")
    p_ray.add_argument("--samples-out", default="",
                       help="CSV of the minimizer samples (trans-massless)")

    p_ver = sub.add_parser("verify", help="run every anchored check; exit 0 iff all pass")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--grid-n", type=int, default=8000)

    return parser


def _cmd_density(args) -> int:
    if args.profile == "cosine":
        profile = kg_fields.CosineProfile(args.m)
    else:
        profile = kg_fields.GaussianProfile(args.sigma)
    params = kg_fields.WavepacketParams(args.m, args.a, args.t, profile)
    radii = kg_fields.default_radii(args.rmax, args.dr)
    fieldmap = kg_fields.scan_density(params, radii)
    write_csv(args.out, ["r", "rho", "eps"],
              zip(fieldmap.radii, fieldmap.rho, fieldmap.eps))
    if args.map_out:
        x, z, rho = kg_fields.planar_map(fieldmap, args.map_n)
        rows = [(xv, zv, rho[i, j]) for i, xv in enumerate(x)
                for j, zv in enumerate(z)]
        write_csv(args.map_out, ["x", "z", "rho"], rows)
    if args.shells_out:
        atomic_write(args.shells_out, kg_fields.shells_json(fieldmap) + "\n")
    shells = fieldmap.negative_shells
    if shells:
        ranges = ", ".join(f"[{s.r_min:.3f}, {s.r_max:.3f}]" for s in shells)
        print(f"negative charge-density shells: {len(shells)} ({ranges})",
              file=sys.stderr)
    else:
        print("no negative charge-density shell on this grid", file=sys.stderr)
    if len(fieldmap.failed_radii):
        shown = ", ".join(_fmt(r) for r in fieldmap.failed_radii[:5])
        more = "" if len(fieldmap.failed_radii) <= 5 else ", ..."
        print(f"quadrature did not settle at {len(fieldmap.failed_radii)} radii: "
              f"r = {shown}{more}", file=sys.stderr)
        return 1
    return 0


def _cmd_potential(args) -> int:
    d_values = args.d if args.d is not None else [0.0, 0.5, 1.0, 2.0, INFINITY]
    q = args.q if args.q is not None else parse_range("0.05:6:0.05")
    channel = "scalar" if args.spin == 0 else "longitudinal"
    rows = []
    for d in d_values:
        spec = PotentialSpec(args.spin, channel, d, args.l)
        w = potentials.effective_potential(q, spec)
        rows.extend((d, qv, wv) for qv, wv in zip(q, w))
    if len(d_values) == 1:
        write_csv(args.out, ["q", "W"], [(r[1], r[2]) for r in rows])
    else:
        write_csv(args.out, ["d", "q", "W"], rows)
    return 0


def _cmd_gamma(args) -> int:
    channel = args.channel or ("scalar" if args.spin == 0 else "longitudinal")
    template = PotentialSpec(args.spin, channel, 0.0, args.l)
    grid = eigensolver.RadialGrid(n=args.grid_n)
    workers = max(1, int(os.environ.get("RELBOSONS_THREADS", "1")))
    curve = eigensolver.gamma_curve(template, args.d, grid, workers=workers)
    if args.fmt == "csv":
        rows = [(p.d, p.gamma, p.residual, p.method if p.ok else f"failed:{p.message}")
                for p in curve.points]
        text = "\n".join([",".join(["d", "gamma", "residual", "method"])]
                         + [",".join(_fmt(v) if isinstance(v, float) else str(v)
                                     for v in row) for row in rows]) + "\n"
    else:
        def num(x):
            return None if math.isnan(x) else x

        payload = {
            "spin": args.spin, "channel": channel, "angular_index": args.l,
            "grid": {"q_min": grid.q_min, "q_max": grid.q_max, "n": grid.n},
            "points": [{"d": ("inf" if math.isinf(p.d) else p.d),
                        "gamma": num(p.gamma), "residual": num(p.residual),
                        "method": p.method, "gamma_fd": num(p.gamma_fd),
                        "gamma_shooting": num(p.gamma_shooting),
                        "ok": p.ok, "message": p.message}
                       for p in curve.points],
        }
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    for p in curve.points:
        if not p.ok:
            print(f"gamma failed at d = {_fmt(p.d)}: {p.message}", file=sys.stderr)
    return 0 if curve.all_ok else 1


def _cmd_rayleigh(args) -> int:
    payload = {"case": args.case}
    samples = None
    if args.case in ("spin0", "long"):
        d = (args.d or [0.0])[0]
        functional = (variational.spin0_functional(d) if args.case == "spin0"
                      else variational.longitudinal_functional(d))
        grid = variational.RadialMomentumGrid()
        qv = grid.q
        if math.isinf(d):
            alpha = eigensolver.ALPHA_GOLDEN
            f = qv ** (alpha - 1.0) * np.exp(-qv * qv / 2.0)
        elif d == 0.0 and args.case == "spin0":
            f = np.exp(-qv * qv / 2.0)
        elif d == 0.0:
            f = qv * np.exp(-qv * qv / 2.0)
        else:
            spec = (potentials.spec_spin0(d) if args.case == "spin0"
                    else potentials.spec_spin1(d))
            res = eigensolver.solve_ground_fd(spec)
            f = np.interp(qv, res.q_samples, res.u_samples / res.q_samples,
                          right=0.0)
        state = variational.evaluate_state(grid, f, functional)
        payload.update(d=("inf" if math.isinf(d) else d), iterations=0)
    elif args.case == "trans-nonrel":
        grid = variational.RadialMomentumGrid()
        qv = grid.q
        state = variational.evaluate_state(
            grid, np.exp(-qv * qv / 2.0), variational.transverse_nonrel_functional())
        payload.update(iterations=0)
    else:
        state = variational.minimize_transverse_massless()
        payload.update(iterations=state.meta["iterations"],
                       euler_lagrange_residual=variational.euler_lagrange_residual(state),
                       separation_oracle=variational.separation_oracle(),
                       closed_form_readings={
                           k: (v if isinstance(v, str) else float(v))
                           for k, v in variational.closed_form_readings().items()})
        samples = state
    payload.update(gamma=state.gamma, delta_q2=state.delta_q2,
                   delta_rq2=state.delta_rq2, norm_N2=state.norm_N2)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.samples_out and samples is not None:
        grid = samples.geometry
        rows = [(qp, qz, samples.f_samples[i, j])
                for i, qp in enumerate(grid.q_perp)
                for j, qz in enumerate(grid.q_z)]
        write_csv(args.samples_out, ["q_perp", "q_z", "f"], rows)
    return 0


def _cmd_verify(args) -> int:
    checks = verify.run_verify(seed=args.seed, grid_n=args.grid_n)
    print(verify.format_report(checks))
    return 0 if all(c.passed for c in checks) else 1


_DISPATCH = {
    "density": _cmd_density,
    "potential": _cmd_potential,
    "gamma": _cmd_gamma,
    "rayleigh": _cmd_rayleigh,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for flag errors
        return int(exc.code or 0)
    config = RunConfig.from_args(args)
    try:
        return _DISPATCH[config.subcommand](config)
    except Exception as exc:
        print(f"relbosons {config.subcommand}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
