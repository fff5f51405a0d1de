"""Command-line front end.

Every command writes a JSON or CSV artifact (stdout or ``--output``) that
embeds a run manifest: a ``manifest`` key in JSON, ``#`` header lines in CSV.
Floats are printed with their shortest round-trip representation.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import channels as ch
from . import io
from . import optimizer as opt
from . import regions as rg
from . import simulator as sim
from .errors import ConfigError, QmacError, ShapeError


def _manifest(args, inputs: dict, outputs: list) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {
        "command": args.command,
        "inputs": inputs,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "outputs": outputs,
    }


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag] if x.imag else x.real
    if isinstance(x, np.generic):
        return _plain(x.item())
    return x


def _csv(header: Sequence[str], rows, manifest: dict) -> str:
    lines = [f"# {k}: {json.dumps(_plain(v), sort_keys=True)}" for k, v in manifest.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def ensemble_to_dict(ens: ch.EnsembleSpec) -> dict:
    out = {"p_x1": ens.p_x1, "p_x2": ens.p_x2}
    out["p_u" if ens.p_u is not None else "p_uv"] = ens.p_u if ens.p_u is not None else ens.p_uv
    for k in ("theta", "zeta", "p_x1x2"):
        v = getattr(ens, k)
        if v is not None:
            out[k] = np.round(v, 15)
    if ens.instrument is not None:
        out["instrument"] = [w for _, w in ens.instrument.outcomes]
    return out


# --- commands ------------------------------------------------------------------

def cmd_region_eval(args) -> None:
    channel = io.read_channel(args.channel)
    if isinstance(channel, ch.BosonicParams):
        if args.kind not in ("df_sc", "none"):
            raise ShapeError("bosonic channels support kinds df_sc (cribbing) and none only")
        bounds = rg.bosonic_region(channel, with_cribbing=args.kind == "df_sc")
    else:
        if args.ensemble is None:
            raise ConfigError("config error: --ensemble is required for this channel kind")
        bounds = rg.eval_region(args.kind, channel, io.read_ensemble(args.ensemble))
    inputs = {"channel": args.channel, "ensemble": args.ensemble}
    doc = {"manifest": _manifest(args, inputs, [args.output] if args.output else []),
           "kind": args.kind, "bounds": bounds.to_dict()}
    _emit(_dump_json(doc), args.output)


def cmd_bosonic(args) -> None:
    params = ch.BosonicParams(args.eta1, args.eta2, args.na1, args.na2, args.nc)
    crib = rg.bosonic_region(params, True)
    none = rg.bosonic_region(params, False)
    manifest = _manifest(args, {}, [args.output] if args.output else [])
    manifest["bounds"] = {"crib": crib.to_dict(), "none": none.to_dict()}
    if args.polygon:
        rows = [("crib", repr(r1), repr(r2)) for r1, r2 in rg.polygon(crib)]
        rows += [("none", repr(r1), repr(r2)) for r1, r2 in rg.polygon(none)]
        _emit(_csv(["curve", "r1", "r2"], rows, manifest), args.output)
        return
    if args.sweep < 1:
        raise ConfigError("config error: --sweep needs at least one lambda")
    lams = [1.0] if args.sweep == 1 else np.linspace(0.0, 1.0, args.sweep)
    rows = []
    for lam in lams:
        rows.append((float(lam), *rg.corner(crib, lam), *rg.corner(none, lam)))
    _emit(_csv(["lambda", "r1_crib", "r2_crib", "r1_none", "r2_none"], rows, manifest), args.output)


def _parse_lambdas(text: str) -> list[float]:
    try:
        lams = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"config error: --lambdas must be comma-separated numbers, got {text!r}") from None
    return lams


def cmd_optimize(args) -> None:
    channel = io.read_channel(args.channel)
    if isinstance(channel, ch.BosonicParams):
        raise ShapeError("bosonic regions are closed form; use the bosonic command")
    cfg = opt.OptimizerConfig(restarts=args.restarts, max_iters=args.max_iters, tol=args.tol, seed=args.seed,
                              card_u=args.card_u, card_v=args.card_v,
                              state_parameterization=args.state_parameterization)
    points = [opt.maximize_weighted_rate(args.kind, channel, lam, cfg) for lam in _parse_lambdas(args.lambdas)]
    outputs = [p for p in (args.output, args.json_output) if p]
    manifest = _manifest(args, {"channel": args.channel}, outputs)
    rows = [(p.lam, p.r1, p.r2, p.objective, p.bounds.b1, p.bounds.b2, p.bounds.b12, p.restart) for p in points]
    _emit(_csv(["lambda", "r1", "r2", "objective", "b1", "b2", "b12", "restart"], rows, manifest), args.output)
    if args.json_output:
        doc = {"manifest": manifest, "kind": args.kind,
               "points": [{"lambda": p.lam, "r1": p.r1, "r2": p.r2, "objective": p.objective,
                           "bounds": p.bounds.to_dict(), "restart": p.restart,
                           "ensemble": ensemble_to_dict(p.ensemble)} for p in points],
               "frontier": [[p.r1, p.r2] for p in opt.upper_envelope(points)]}
        _emit(_dump_json(doc), args.json_output)


def cmd_simulate(args) -> None:
    channel = io.read_channel(args.channel)
    if not isinstance(channel, ch.CqMacSpec):
        raise ShapeError("simulation needs a cq_table channel")
    ens = io.read_ensemble(args.ensemble)
    cfg = sim.SimConfig(n=args.n, T=args.blocks, trials=args.trials, seed=args.seed,
                        delta=args.delta, decoder=args.decoder)
    if args.scheme == "df":
        report = sim.simulate_df_noiseless(channel, ens, io.parse_rates(args.rates, 2), cfg)
    else:
        report = sim.simulate_packing_single_block(channel.table, ens, args.n, io.parse_rates(args.rates, 3), cfg)
    if not args.timing:
        report["wall_time_ms"] = None
    report["manifest"] = _manifest(args, {"channel": args.channel, "ensemble": args.ensemble},
                                   [args.output] if args.output else [])
    _emit(_dump_json(report), args.output)


def cmd_check_robust(args) -> None:
    channel = io.read_channel(args.channel)
    if isinstance(channel, ch.CqMacSpec):
        channel = ch.cq_to_cribbing_mac(channel)
    elif not isinstance(channel, ch.CribbingMac):
        raise ShapeError("robustness needs a kraus or cq_table channel")
    extra = io.read_extra_inputs(args.extra_inputs) if args.extra_inputs else None
    report = ch.check_robust_cribbing(channel, args.tol, extra)
    doc = {"manifest": _manifest(args, {"channel": args.channel, "extra_inputs": args.extra_inputs},
                                 [args.output] if args.output else []),
           **report.to_dict()}
    _emit(_dump_json(doc), args.output)


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in rg.RegionKind]

    r = sub.add_parser("region-eval", help="evaluate rate bounds at one ensemble")
    r.add_argument("channel")
    r.add_argument("--kind", required=True, choices=kinds)
    r.add_argument("--ensemble")
    r.add_argument("--output")
    r.set_defaults(func=cmd_region_eval)

    b = sub.add_parser("bosonic", help="bosonic MAC frontiers with and without cribbing (CSV)")
    b.add_argument("--eta1", type=float, required=True)
    b.add_argument("--eta2", type=float, required=True)
    b.add_argument("--na1", type=float, required=True)
    b.add_argument("--na2", type=float, required=True)
    b.add_argument("--nc", type=float, default=0.0)
    b.add_argument("--sweep", type=int, default=11, metavar="LAMBDA_COUNT")
    b.add_argument("--polygon", action="store_true", help="emit region vertices instead of a lambda sweep")
    b.add_argument("--output")
    b.set_defaults(func=cmd_bosonic)

    o = sub.add_parser("optimize", help="weighted-rate frontier (CSV, optional JSON of ensembles)")
    o.add_argument("channel")
    o.add_argument("--kind", required=True, choices=kinds)
    o.add_argument("--lambdas", default="0,0.25,0.5,0.75,1")
    o.add_argument("--restarts", type=int, default=8)
    o.add_argument("--max-iters", type=int, default=500)
    o.add_argument("--tol", type=float, default=1e-7)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--card-u", type=int)
    o.add_argument("--card-v", type=int)
    o.add_argument("--state-parameterization", default="basis_states", choices=opt.PARAMETERIZATIONS)
    o.add_argument("--output")
    o.add_argument("--json-output")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("simulate", help="Monte-Carlo of the cribbing scheme or the packing decoder (JSON)")
    s.add_argument("channel")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--scheme", choices=("df", "packing"), default="df")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--blocks", type=int, default=4)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--rates", required=True, help="R1,R2 for df; R0,R1,R2 for packing")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--decoder", choices=sim.DECODERS, default="pgm_direct")
    s.add_argument("--timing", action="store_true", help="record wall time (makes output non-reproducible)")
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check-robust", help="certify robust cribbing on the maximally entangled input")
    c.add_argument("channel")
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--extra-inputs")
    c.add_argument("--output")
    c.set_defaults(func=cmd_check_robust)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except QmacError as exc:
        print(f"qmac {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"qmac {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
