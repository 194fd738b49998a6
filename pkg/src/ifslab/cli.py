"""Command-line entry point: ``ifslab <command> [options]``.

Exit codes: 0 success, 2 verification failure, 1 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import continua, plotting
from .boxdim import read_cloud_csv, sum_embed, upper_box_dimension
from .detect import scan_candidates, transversal_seeds
from .errors import (DegenerateFit, IfsLabError, NoneFound, NotAnnular, NotChain,
                     NotEmptyInterior, VerificationFailed)
from .experiments import (frame_for, jacobian_audit, load_config, maps_from_config,
                          run_separation, standard_zoo, write_outcome)
from .geometry import Chart
from .ifs import coverage_test, finite_transitivity_suite, random_model, suite_agrees
from .io import write_json
from .maps import map_from_config
from .seeding import substream

SCHEMA = """\
config JSON (every key optional; defaults shown in README):
  chart            "annulus" | "torus" | "square"
  f, g             map objects {"kind": ..., "params": {...}}
                   kinds: identity, integrable_twist {coeffs | slope, offset},
                   rotation {angle}, kicked_twist {k, shape}, composite {maps},
                   inverse {map}, conjugate {g, h}, separator {spec, band}
  band             [lo, hi]  annulus band E
  delta            margin of E inside the square frame
  n                power of the maps whose circles are detected
  resolution       grid resolution N
  detect           {count, T, spread_tol, conjugate_spread_tol}
  bump             {half_width, inner_half_width, rho_outer, rho_inner}
  search           {margin (null = 2/N), budget}
  coverage         {start: [x, y], resolution, budget}
  check_conjugation, t (null = search), seed"""

STOCHASTIC = {"separate", "finite-oracle", "jacobian-audit"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ifslab", description="IFS transitivity and separation laboratory")
    common = _Parser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (created if absent)")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--threads", type=int, default=None,
                        help="parallelism cap (default: available cores)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("coverage", parents=[common], help="grid coverage of IFS(f, g)")
    c.add_argument("--config", help="JSON with chart, f, g and coverage")
    c.add_argument("--resolution", type=int)
    c.add_argument("--budget", type=int)

    c = sub.add_parser("detect", parents=[common], help="invariant circle family of f^n")
    c.add_argument("--config", help="JSON with chart, f, band, delta, n, resolution, detect")
    c.add_argument("--resolution", type=int)

    c = sub.add_parser("separate", parents=[common], help="the full separation experiment")
    c.add_argument("--config", help="experiment JSON")
    c.add_argument("--resolution", type=int)
    c.add_argument("--budget", type=int, help="coverage budget")

    c = sub.add_parser("boxdim", parents=[common], help="box dimension of a CSV point cloud")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--kmin", type=int, default=2)
    c.add_argument("--kmax", type=int, default=8)

    c = sub.add_parser("frontier", parents=[common], help="frontier of a PBM continuum")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--band", type=float, nargs=2, default=(0.0, 1.0))

    c = sub.add_parser("finite-oracle", parents=[common], help="nine-notion suite on finite models")
    c.add_argument("--models", type=int, default=500)
    c.add_argument("--max-n", type=int, default=12)

    c = sub.add_parser("jacobian-audit", parents=[common], help="area preservation check")
    c.add_argument("--config", help="JSON map object; default audits the whole zoo")
    c.add_argument("--points", type=int, default=1000)
    c.add_argument("--tol", type=float, default=1e-6)
    return p


def _threads(n):
    n = n or os.cpu_count() or 1
    import numba
    with warnings.catch_warnings():
        # numba probes threading layers here and warns about an old TBB
        warnings.simplefilter("ignore")
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    return max(1, n)


def _overrides(args) -> dict:
    over = {}
    if getattr(args, "resolution", None):
        over["resolution"] = args.resolution
        over["coverage"] = {"resolution": args.resolution}
    if getattr(args, "budget", None):
        over.setdefault("coverage", {})["budget"] = args.budget
    if args.seed is not None:
        over["seed"] = args.seed
    return over


# ---------------------------------------------------------------- commands

def cmd_coverage(args, out: Path) -> int:
    cfg = load_config(args.config, **_overrides(args))
    f, g = maps_from_config(cfg)
    cov = cfg["coverage"]
    rep = coverage_test(f, g, tuple(cov["start"]), cov["resolution"], cov["budget"])
    rep.write_csv(out / "coverage.csv")
    rep.write_json(out / "coverage.json")
    continua.write_pgm(out / "coverage.pgm", rep.coverage_map().astype(np.int64), maxval=1)
    if not args.no_figures:
        plotting.coverage_figures(rep, out)
    print(f"coverage {rep.fraction:.6f} after {rep.steps} steps"
          f"{' (saturated)' if rep.saturated else ''}")
    return 0


def cmd_detect(args, out: Path) -> int:
    cfg = load_config(args.config, **_overrides(args))
    chart = Chart.from_name(cfg["chart"])
    f = map_from_config(cfg["f"], chart)
    d = cfg["detect"]
    N = cfg["resolution"]
    frame = frame_for(cfg["band"], cfg["delta"])
    band = tuple(cfg["band"])
    cands = scan_candidates(f, band, cfg["n"], transversal_seeds(band, d["count"]), d["count"],
                            d["T"], d["spread_tol"], bins=N)
    with open(out / "candidates.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed_x", "seed_y", "rotation", "residual", "spread", "accepted", "reason"])
        for c in cands:
            w.writerow([format(c.seed[0], ".17g"), format(c.seed[1], ".17g"),
                        format(c.rotation.value, ".17g"), format(c.rotation.residual, ".17g"),
                        format(c.spread, ".17g"), int(c.accepted), c.reason])
    from .experiments import detect_family
    try:
        det = detect_family(f, cfg)
    except NoneFound as exc:
        print(f"NoneFound: {exc}")
        write_json(out / "family.json", {"members": [], "frame": list(frame)})
        return 0
    fam = det.family
    continua.write_family_pgm(out / "family.pgm", fam)
    write_json(out / "family.json", {"frame": list(frame), "N": N,
                                     "order_key": [list(k) for k in fam.order_key],
                                     "members": [continua.to_json(K) for K in fam]})
    if not args.no_figures:
        plotting.family_figure(fam.members, out / "family.png", f"{len(fam)} circles")
    print(f"{len(fam)} circles accepted from {len(cands)} seeds")
    return 0


def cmd_separate(args, out: Path) -> int:
    cfg = load_config(args.config, **_overrides(args))
    f, g = maps_from_config(cfg)
    try:
        outcome = run_separation(f, g, config=cfg)
    except VerificationFailed as exc:
        write_json(out / "verification_failures.json",
                   {"message": str(exc), "pairs": [list(p) for p in exc.failures]})
        print(f"VerificationFailed: {exc}")
        return 2
    write_outcome(outcome, out, figures=not args.no_figures)
    print(f"separated {len(outcome.verification)} pairs; coverage "
          f"{outcome.coverage_before.fraction:.6f} -> {outcome.coverage_after.fraction:.6f}")
    return 0


def cmd_boxdim(args, out: Path) -> int:
    P = read_cloud_csv(args.inp)
    est = upper_box_dimension(P, (args.kmin, args.kmax))
    report = {"points": len(P), "scales": list(est.scales), "counts": list(est.counts),
              "slope": est.slope, "slope_ci": est.slope_ci}
    try:
        s = sum_embed(P)
        report["chain"] = True
        report["sum_embed_range"] = [float(s.min()), float(s.max())]
    except NotChain as exc:
        report["chain"] = False
        report["not_chain_pair"] = list(exc.pair)
    write_json(out / "boxdim.json", report)
    if not args.no_figures:
        plotting.loglog_figure(est, out / "boxdim.png")
    print(f"slope {est.slope:.6f} +- {est.slope_ci:.6f} over {len(P)} points")
    return 0


def cmd_frontier(args, out: Path) -> int:
    K = continua.read_pbm(args.inp)
    band = tuple(args.band)
    try:
        dec = continua.extract_frontier(K, band)
    except (NotEmptyInterior, NotAnnular) as exc:
        print(f"{type(exc).__name__}: {exc}")
        if not args.no_figures:
            plotting.frontier_figure(K, None, out / "frontier.png")
        return 2
    continua.write_pbm(out / "frontier.pbm", dec.frontier)
    continua.dump_json(out / "frontier.json", dec.frontier)
    if not args.no_figures:
        plotting.frontier_figure(K, dec, out / "frontier.png")
    print(f"frontier has {dec.frontier.size} of {K.size} cells")
    return 0


def cmd_finite_oracle(args, out: Path, threads: int) -> int:
    rng = substream(args.seed, "finite-oracle")
    models = [random_model(rng, args.max_n) for _ in range(args.models)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        reports = list(pool.map(finite_transitivity_suite, models))
    agree = sum(suite_agrees(r) for r in reports)
    with open(out / "finite_oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "n", "f", "g", *reports[0].keys()] if reports else ["model"])
        for k, (m, r) in enumerate(zip(models, reports)):
            w.writerow([k, m.n, " ".join(map(str, m.f)), " ".join(map(str, m.g)),
                        *(int(v) for v in r.values())])
    write_json(out / "finite_oracle.json", {"models": len(models), "agree": agree,
                                            "transitive": sum(r["group_transitive"]
                                                              for r in reports)})
    print(f"9/9 equivalent in {agree}/{len(models)} models")
    return 0 if agree == len(models) else 2


def cmd_jacobian_audit(args, out: Path) -> int:
    if args.config:
        import json
        spec = json.loads(Path(args.config).read_text())
        zoo = {spec.get("kind", "map"): map_from_config(spec)}
    else:
        zoo = standard_zoo(args.seed)
    rows = {}
    for name, m in zoo.items():
        rows[name] = jacobian_audit(m, args.points, substream(args.seed, f"audit/{name}"))
    write_json(out / "jacobian_audit.json", {"tol": args.tol, "points": args.points,
                                             "max_abs_det_minus_one": rows})
    for name, v in rows.items():
        print(f"{name:28s} {v:.3e} {'ok' if v < args.tol else 'FAIL'}")
    return 0 if all(v < args.tol for v in rows.values()) else 2


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        if args.command in STOCHASTIC and args.seed is None:
            raise UsageError(f"{args.command} is stochastic; --seed is required")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        print(SCHEMA, file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    threads = _threads(args.threads)
    t0 = time.perf_counter()
    try:
        if args.command == "finite-oracle":
            code = cmd_finite_oracle(args, out, threads)
        else:
            code = {"coverage": cmd_coverage, "detect": cmd_detect, "separate": cmd_separate,
                    "boxdim": cmd_boxdim, "frontier": cmd_frontier,
                    "jacobian-audit": cmd_jacobian_audit}[args.command](args, out)
    except (IfsLabError, ValueError, KeyError, OSError, DegenerateFit) as exc:
        if isinstance(exc, VerificationFailed):
            print(f"VerificationFailed: {exc}", file=sys.stderr)
            return 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(SCHEMA, file=sys.stderr)
        return 1
    print(f"[{args.command}] done in {time.perf_counter() - t0:.2f}s -> {out}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
