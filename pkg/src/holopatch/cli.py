"""Command-line front end.

Exit status: 0 on success, 2 when a computed quantity misses its tolerance,
1 on bad input (unreadable or malformed config, bad geometry).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cartan import CartanError, GroupMapSample, split_multiplicative
from .combinatorics import bipartize_by_splitting, read_edge_list, suppress_degree_two, two_color
from .compacts import DiscretizedCompact, validate_good_pair
from .config import (ConfigError, PipelineConfig, compile_function, compile_matrix,
                     interpolation_from_config, pair_from_config, read_config, set_from_config)
from .cousin import AdditiveSplitter
from .patching import SectionChart, TransitionMap, patch_sections
from .pipelines import DEMOS, _plain
from .spaces import InterpolationSet, SampledMap, project_vanishing

log = logging.getLogger("holopatch")

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE = 0, 1, 2


def _write_report(path, report: dict) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(_plain(report), indent=2, sort_keys=True) + "\n")


def _load(args) -> dict:
    if not args.config:
        raise ConfigError("--config is required for this command")
    return read_config(args.config)


def _pair(args, cfg: dict):
    if "pair" not in cfg:
        raise ConfigError(f"{args.config}: config field pair: required for this command")
    return pair_from_config(cfg["pair"], args.h)


def _compact_csv(path: Path, K: DiscretizedCompact, label: str) -> None:
    path.mkdir(parents=True, exist_ok=True)
    with (path / f"{label}.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "weight", "interior", "component"])
        for z, wt, inn, c in zip(K.points, K.weights, K.interior, K.labels):
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(wt)), int(inn), int(c)])


def _describe(K: DiscretizedCompact) -> dict:
    return {"samples": len(K), "interior_samples": int(K.interior.sum()),
            "components": K.n_components, "area": K.area}


# ---------------------------------------------------------------------------
# subcommands


def cmd_compact_build(args) -> dict:
    cfg = _load(args)
    out = {"command": "compact build"}
    if "set" in cfg:
        K = set_from_config(cfg["set"], args.h)
        out.update(h=K.h, set=_describe(K))
        if args.dump_csv:
            _compact_csv(Path(args.dump_csv), K, "set")
    if "pair" in cfg:
        k1, k2 = _pair(args, cfg)
        ctx = validate_good_pair(k1, k2)
        out.update(h=k1.h, k1=_describe(k1), k2=_describe(k2), k12=_describe(ctx.k12),
                   separation=ctx.separation)
        if args.dump_csv:
            for name, K in (("k1", k1), ("k2", k2), ("k12", ctx.k12)):
                _compact_csv(Path(args.dump_csv), K, name)
    if len(out) == 1:
        raise ConfigError(f"{args.config}: needs a set or a pair block")
    print(json.dumps(_plain(out), sort_keys=True))
    return out


def cmd_cousin_split(args) -> dict:
    cfg = _load(args)
    k1, k2 = _pair(args, cfg)
    ctx = validate_good_pair(k1, k2)
    P = interpolation_from_config(cfg)
    f = project_vanishing(SampledMap.from_function(ctx.k12, compile_function(cfg.get("function"))),
                          P.within(ctx.k12))
    sp = AdditiveSplitter(ctx, P)
    res = sp.split(f)
    i1 = ctx.k1.locate(ctx.k12)
    i2 = ctx.k2.locate(ctx.k12)
    nrm = f.norm()
    recon = float(np.abs(res.t1.values[i1] + res.t2.values[i2] - f.values).max(initial=0.0))
    p1, p2 = P.within(k1), P.within(k2)
    at_p = max([float(np.abs(res.t1.values[p1.snap(k1)]).max(initial=0.0)) if len(p1) else 0.0,
                float(np.abs(res.t2.values[p2.snap(k2)]).max(initial=0.0)) if len(p2) else 0.0])
    h = k1.h
    out = {"command": "cousin split", "h": h, "f_norm": nrm, "reconstruction": recon,
           "reconstruction_bound": 1e-9 * nrm + 10 * h * nrm, "at_interpolation": at_p,
           "norm_bound": sp.norm_bound(), "t1_norm": res.t1.norm(), "t2_norm": res.t2.norm()}
    out["ok"] = recon <= out["reconstruction_bound"] and at_p <= 1e-9 * max(nrm, 1.0)
    print(f"cousin split: |T1 f + T2 f - f| = {recon:.3g}, |T_j f (P)| = {at_p:.3g}, "
          f"norm bound {out['norm_bound']:.3g}")
    return out


def cmd_cartan_split(args) -> dict:
    cfg = _load(args)
    k1, k2 = _pair(args, cfg)
    if "gamma" not in cfg:
        raise ConfigError(f"{args.config}: config field gamma: required for cartan split")
    ctx = validate_good_pair(k1, k2)
    gamma = GroupMapSample.from_function(ctx.k12, compile_matrix(cfg["gamma"]["entries"]))
    try:
        cs = split_multiplicative(gamma, ctx)
        residual, its, ok = cs.residual, cs.iterations, True
    except CartanError as exc:
        log.error("%s", exc)
        residual, its, ok = float("nan"), -1, False
    out = {"command": "cartan split", "h": k1.h, "residual": residual, "iterations": its,
           "ok": bool(ok and residual <= 1e-8 * (1 + gamma.sup_norm()))}
    print(f"cartan split: residual {residual:.3g} after {its} iterations")
    return out


def cmd_patch(args) -> dict:
    cfg = _load(args)
    k1, k2 = _pair(args, cfg)
    ctx = validate_good_pair(k1, k2)
    F = TransitionMap.from_config(cfg.get("transition", {"kind": "shear"}))
    P = interpolation_from_config(cfg)
    eps = float(cfg.get("epsilon", 0.1) if args.epsilon is None else args.epsilon)
    pert = float(cfg.get("perturbation", 1e-3))
    t = compile_function(cfg.get("function", {"expr": "0"}))
    u1 = SectionChart.from_fibre(k1, t(k1.points))
    w = F(SectionChart.from_fibre(k2, t(k2.points)).values)
    # holomorphic bump vanishing on P, normalised on K2
    prof = np.ones(len(k2), complex)
    for p in P.points:
        prof *= k2.points - p
    prof /= np.abs(prof).max()
    w[:, :-1] += pert * prof[:, None]
    res = patch_sections(u1, SectionChart(k2, w), F, ctx, P, eps, mode=cfg.get("engine", {}).get("mode", "frozen"))
    vmax = max(res.v1.norm(), res.v2.norm())
    at_p = 0.0
    for v, K in ((res.v1, k1), (res.v2, k2)):
        q = P.within(K)
        if len(q):
            at_p = max(at_p, float(np.abs(v.values[q.snap(K)]).max()))
    out = {"command": "patch", "h": k1.h, "epsilon": eps, "perturbation": pert,
           "gluing_residual": res.residual, "v_norm": vmax, "v_at_interpolation": at_p,
           "newton_iterations": res.iterations, "s_norm": res.s_norm, "delta": res.delta,
           "ok": bool(res.residual <= 1e-8 and vmax <= eps and at_p == 0.0)}
    print(f"patch: gluing residual {res.residual:.3g}, |v| = {vmax:.3g}, "
          f"{res.iterations} Newton steps")
    return out


def cmd_bipartize(args) -> dict:
    if not args.edges:
        raise ConfigError("bipartize needs --edges <file>")
    p = Path(args.edges)
    if not p.exists():
        raise ConfigError(f"edge list not found: {p}")
    g = read_edge_list(p)
    b = bipartize_by_splitting(g)
    col = two_color(b.graph)
    back = suppress_degree_two(b.graph, b.fresh_vertices)
    print("split edges: " + (" ".join(f"{u}-{v}" for u, v in b.split_edges) or "none"))
    print("coloring: " + " ".join(f"{v}:{col.colors[v]}" for v in b.graph.vertices))
    return {"command": "bipartize", "split_edges": [list(e) for e in b.split_edges],
            "fresh_vertices": list(b.fresh_vertices), "odd_basis_count": b.odd_basis_count,
            "coloring": {str(k): v for k, v in col.colors.items()},
            "ok": bool(col.ok and set(back.edges) == set(g.edges))}


def cmd_demo(args) -> dict:
    cfg = PipelineConfig.from_dict(_load(args), h=args.h, epsilon=args.epsilon, seed=args.seed)
    t0 = time.perf_counter()
    approx = DEMOS[args.name](cfg)
    rep = approx.report
    if args.dump_csv:
        approx.write_csv(Path(args.dump_csv) / f"demo_{args.name}.csv")
    print(f"demo {args.name}: sup_error {rep.sup_error:.3g} (epsilon {rep.epsilon:g}), "
          f"interpolation {rep.interpolation_max:.3g}, cr_residual {rep.cr_residual_max:.3g} "
          f"(bound {rep.cr_bound:.3g})  [{time.perf_counter() - t0:.1f}s]")
    return rep.to_dict()


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--report", help="write a JSON report here")
    common.add_argument("--dump-csv", dest="dump_csv", help="directory for CSV sample dumps")
    common.add_argument("--h", type=float, help="override the lattice spacing")
    common.add_argument("--epsilon", type=float, help="override the approximation tolerance")
    common.add_argument("--seed", type=int, help="override the random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="holopatch", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"holopatch {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compact", help="discretised compacts")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("build", parents=[common]).set_defaults(func=cmd_compact_build)

    c = sub.add_parser("cousin", help="additive splitting on a good pair")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("split", parents=[common]).set_defaults(func=cmd_cousin_split)

    c = sub.add_parser("cartan", help="multiplicative splitting on a good pair")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("split", parents=[common]).set_defaults(func=cmd_cartan_split)

    sub.add_parser("patch", parents=[common],
                   help="glue two sections across a transition map").set_defaults(func=cmd_patch)

    b = sub.add_parser("bipartize", parents=[common], help="make a graph bipartite by edge splits")
    b.add_argument("--edges", help="edge list, one 'u v' pair per line")
    b.set_defaults(func=cmd_bipartize)

    d = sub.add_parser("demo", parents=[common], help="end-to-end approximation runs")
    d.add_argument("name", choices=sorted(DEMOS))
    d.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:  # geometry and interpolation problems with the input
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:  # a solver or pipeline stage missed its tolerance
        print(f"tolerance failure: {exc}", file=sys.stderr)
        if args.report:
            _write_report(args.report, {"command": args.command, "ok": False, "error": str(exc)})
        return EXIT_TOLERANCE
    if args.report:
        _write_report(args.report, out)
    return EXIT_OK if out.get("ok", True) else EXIT_TOLERANCE


cli_main = main

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
