"""Experiment harness: seeded, replicated runs with bit-stable artifacts.

Every subcommand resolves its configuration from defaults, an optional JSON
config file, and command-line flags (flags win), writes the resolved config
plus its hash to config.lock.json, data to documented CSV files, and a
summary with pass/fail checks to report.json.  Identical configurations
produce bitwise-identical artifacts; wall-clock timing goes to the
timing.json sidecar only.  Exit status is 0 iff all configured checks pass.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import _io, _sweeps, stats
from .duality import (dual_weights, interface_portrait, verify_duality)
from .errors import KpzlabError
from .lattice import (DualPoint, LatticePoint, WeightField, Window,
                      derive_seed)
from .lpp import LatticePath, geodesic, passage_table
from .parallel import make_map, thread_count
from .scaling import ScalingParams, landscape_point_to_lattice, rescale_path
from .trees import build_tree, busemann_field, certify_stabilization

DEFAULTS = {
    "simulate": {"seed": 1, "size": 64, "k": 0, "dump_weights": False},
    "duality": {"seed": 1, "size": 256, "k": 1024},
    "dimension": {"seed": 1, "n": 4096, "scales": 9, "replicas": 16,
                  "expect": 4.0 / 3.0, "tol": 0.10,
                  "control_expect": 1.5, "control_tol": 0.05},
    "exponent": {"seed": 1, "sizes": "256,512,1024,2048,4096,8192",
                 "replicas": 64, "expect": 0.667, "tol": 0.05},
    "holder": {"seed": 1, "n": 16384, "gap_min_pow": 11, "gap_max_pow": 5,
               "expect": 0.67, "tol": 0.07},
    "occupation": {"seed": 1, "n": 256, "replicas": 256,
                   "interval_x": "-0.5,0.5", "interval_t": "-1,0",
                   "m_values": "0,1,2,4,6,8,10"},
    "busemann": {"seed": 1, "size": 384, "k": 1536, "pool_seeds": 24,
                 "diag_stride": 24, "count": 100000,
                 "mean_tol": 0.05, "var_expect": 8.0, "var_tol": 0.4,
                 "ks_tol": 0.01},
    "highways": {"seed": 1, "grid": 32, "spacing": 2, "start_level": 0,
                 "end_level": 96, "strip": "32,64", "growth_tol": 0.10},
    "frame": {"seed": 1, "n": 64, "grid": 12, "x_span": 0.5},
    "one-ended": {"seed": 1, "seeds": 32, "k": 16, "spacing": 2,
                  "height_factors": "2,4,8", "threshold": 0.9},
    "export": {"seed": 1, "size": 64, "k": 256, "what": "tree"},
}

_INT_KEYS = {"seed", "size", "k", "n", "scales", "replicas", "pool_seeds",
             "diag_stride", "count", "grid", "spacing", "start_level",
             "end_level", "seeds", "gap_min_pow", "gap_max_pow"}
_FLOAT_KEYS = {"expect", "tol", "control_expect", "control_tol", "mean_tol",
               "var_expect", "var_tol", "ks_tol", "growth_tol", "x_span",
               "threshold"}


def _check(name, observed, expected, tol):
    passed = abs(observed - expected) <= tol
    return {"name": name, "expected": expected, "observed": observed,
            "tolerance": tol, "passed": bool(passed)}


def _check_pred(name, observed, description, passed):
    return {"name": name, "expected": description, "observed": observed,
            "tolerance": 0, "passed": bool(passed)}


def _ints(csv):
    return [int(x) for x in str(csv).split(",") if x != ""]


def _floats(csv):
    return [float(x) for x in str(csv).split(",") if x != ""]


# ---------------------------------------------------------------------------
# command implementations; each returns (results, checks, csv files written)

def _field_for_window(seed, window, reach):
    lo = LatticePoint(window.lo.i - reach, window.lo.j - reach)
    hi = LatticePoint(window.hi.i + reach, window.hi.j + reach)
    return WeightField(seed, Window(lo, hi))


def cmd_simulate(cfg, out, pmap):
    size, k = cfg["size"], cfg["k"] or 4 * cfg["size"]
    window = Window.centered(size)
    X = _field_for_window(cfg["seed"], window, k + 2)
    tree = build_tree(X, window, "down", k)
    portrait = interface_portrait(tree)
    cert = certify_stabilization(X, window, k)
    B = busemann_field(X, window, k)
    rows = _io.tree_edge_rows(tree, "tree_down") + \
        _io.portrait_edge_rows(portrait, "portrait_up")
    _io.write_csv(os.path.join(out, "edges.csv"),
                  ["x1", "y1", "x2", "y2", "kind"], rows)
    _io.write_csv(os.path.join(out, "busemann.csv"), ["i", "j", "value"],
                  [(p.i, p.j, B.value(p)) for p in window.points()])
    if cfg["dump_weights"]:
        _io.write_csv(os.path.join(out, "weights.csv"), ["i", "j", "weight"],
                      [(p.i, p.j, X.weight(p)) for p in window.points()])
    results = {"certificate": cert.to_dict(), "tie_count": tree.tie_count,
               "edges_tree": size * size, "edges_portrait": size * size}
    return results, [], ["edges.csv", "busemann.csv"]


def cmd_duality(cfg, out, pmap):
    window = Window.centered(cfg["size"])
    report = verify_duality(cfg["seed"], window, cfg["k"])
    checks = [
        _check("match_down", report.match_down, 1.0, 0.0),
        _check("match_up", report.match_up, 1.0, 0.0),
    ]
    return report.to_dict(), checks, []


def _dimension_replica(args):
    seed, n, scales = args
    params = ScalingParams(n)
    end = LatticePoint(n, n)
    X = WeightField(seed, Window(LatticePoint(0, 0), end))
    path = geodesic(X, LatticePoint(0, 0), end)
    pts = rescale_path(path, params).graph_points()
    geo = stats.box_dimension(pts, scales)
    ctrl = stats.box_dimension(stats.random_walk_graph(derive_seed(seed, 1), 2 * n),
                               scales)
    return geo, ctrl


def cmd_dimension(cfg, out, pmap):
    n, reps = cfg["n"], cfg["replicas"]
    scales = [2.0 ** (-e) for e in range(2, 2 + cfg["scales"])]
    seeds = [derive_seed(cfg["seed"], r) for r in range(reps)]
    results = list(pmap(_dimension_replica, [(s, n, scales) for s in seeds]))
    geo_dims = [g.fitted_dimension for g, _ in results]
    ctrl_dims = [c.fitted_dimension for _, c in results]
    counts = np.array([[r.counts for r, _ in results]])[0]
    mean_counts = np.exp(np.log(counts).mean(axis=0))
    _io.write_csv(os.path.join(out, "boxcount.csv"), ["scale", "count"],
                  list(zip(scales, mean_counts)))
    kept = slice(2, len(scales) - 1)
    slope, err = stats._loglog_fit([1.0 / s for s in scales[kept]],
                                   mean_counts[kept])
    dim = float(np.mean(geo_dims))
    ctrl = float(np.mean(ctrl_dims))
    res = {"fitted_dimension": dim,
           "stderr": float(np.std(geo_dims, ddof=1) / math.sqrt(reps)),
           "csv_fit": slope, "csv_fit_stderr": err,
           "control_dimension": ctrl,
           "scales": scales, "mean_counts": mean_counts,
           "replica_dimensions": geo_dims}
    checks = [
        _check("geodesic_dimension", dim, cfg["expect"], cfg["tol"]),
        _check("control_dimension", ctrl, cfg["control_expect"], cfg["control_tol"]),
    ]
    return res, checks, ["boxcount.csv"]


def cmd_exponent(cfg, out, pmap):
    sizes = _ints(cfg["sizes"])
    fit = stats.fluctuation_exponent(cfg["seed"], sizes, cfg["replicas"],
                                     parallel_map=pmap)
    _io.write_csv(os.path.join(out, "size_rms.csv"), ["size", "rms"],
                  list(zip(fit.sizes, fit.statistics)))
    res = {"fitted_exponent": fit.fitted_exponent, "stderr": fit.stderr,
           "sizes": fit.sizes, "rms": fit.statistics}
    checks = [_check("wandering_exponent", fit.fitted_exponent,
                     cfg["expect"], cfg["tol"])]
    return res, checks, ["size_rms.csv"]


def cmd_holder(cfg, out, pmap):
    n = cfg["n"]
    gaps = [2.0 ** (-e) for e in range(cfg["gap_min_pow"], cfg["gap_max_pow"] - 1, -1)]
    end = LatticePoint(n, n)
    X = WeightField(cfg["seed"], Window(LatticePoint(0, 0), end))
    path = rescale_path(geodesic(X, LatticePoint(0, 0), end), ScalingParams(n))
    fit = stats.holder_exponent(path, gaps)
    _io.write_csv(os.path.join(out, "gap_increment.csv"),
                  ["gap", "max_increment"], list(zip(fit.sizes, fit.statistics)))
    res = {"fitted_exponent": fit.fitted_exponent, "stderr": fit.stderr,
           "gaps": fit.sizes, "max_increments": fit.statistics}
    checks = [_check("holder_exponent", fit.fitted_exponent,
                     cfg["expect"], cfg["tol"])]
    return res, checks, ["gap_increment.csv"]


def _occupation_replica(args):
    seed, n = args
    K = 2 * n
    S = LatticePoint(-K, -K)
    X = WeightField(seed, Window(S, LatticePoint(0, 0)))
    res = _sweeps.sweep_from_source(X, S, LatticePoint(0, 0), want_steps=True)
    verts, chars, _ = _sweeps.backtrack(res, LatticePoint(0, 0))
    return rescale_path(LatticePath(S, chars), ScalingParams(n))


def cmd_occupation(cfg, out, pmap):
    n, reps = cfg["n"], cfg["replicas"]
    I = _floats(cfg["interval_x"])
    J = _floats(cfg["interval_t"])
    Ms = _floats(cfg["m_values"])
    seeds = [derive_seed(cfg["seed"], r) for r in range(reps)]
    paths = list(pmap(_occupation_replica, [(s, n) for s in seeds]))
    res = stats.occupation_exceedance(paths, I, J, Ms)
    res.pop("occupations")
    _io.write_csv(os.path.join(out, "m_frequency.csv"), ["m", "frequency"],
                  list(zip(res["M_values"], res["frequencies"])))
    mono = all(a >= b for a, b in
               zip(res["frequencies"], res["frequencies"][1:]))
    checks = [_check_pred("exceedance_monotone", res["frequencies"],
                          "nonincreasing in M", mono)]
    return res, checks, ["m_frequency.csv"]


def cmd_busemann(cfg, out, pmap):
    z = stats.busemann_increment_ensemble(
        cfg["seed"], cfg["size"], cfg["k"], cfg["pool_seeds"],
        cfg["diag_stride"], parallel_map=pmap)
    if z.size < cfg["count"]:
        raise KpzlabError(
            f"only {z.size} certified increments pooled, need {cfg['count']}")
    z = z[:cfg["count"]]
    summary = stats.increment_law_summary(z)
    _io.write_csv(os.path.join(out, "z.csv"), ["z"], [(v,) for v in z])
    checks = [
        _check("increment_mean", summary["mean"], 0.0, cfg["mean_tol"]),
        _check("increment_variance", summary["variance"],
               cfg["var_expect"], cfg["var_tol"]),
        _check_pred("increment_ks", summary["ks_distance"],
                    f"< {cfg['ks_tol']}", summary["ks_distance"] < cfg["ks_tol"]),
    ]
    return summary, checks, ["z.csv"]


def _highway_field(seed, start_level, end_level, offsets):
    xmin, xmax = min(offsets), max(offsets)
    lo = LatticePoint(start_level + xmin - 1, start_level - xmax - 1)
    hi = LatticePoint(end_level + xmax + 1, end_level - xmin + 1)
    return WeightField(seed, Window(lo, hi))


def cmd_highways(cfg, out, pmap):
    g, sp = cfg["grid"], cfg["spacing"]
    s0, t0 = cfg["start_level"], cfg["end_level"]
    strip = tuple(_ints(cfg["strip"]))
    base = [sp * (l - g // 2) for l in range(g)]
    fine = [(sp // 2) * (l - g) for l in range(2 * g - 1)] if sp >= 2 else base
    X = _highway_field(cfg["seed"], s0, t0, base + fine)
    coarse = stats.highway_census(X, strip, s0, t0, base)
    refined = stats.highway_census(X, strip, s0, t0, fine)
    growth = (refined["distinct"] - coarse["distinct"]) / max(coarse["distinct"], 1)
    res = {"coarse": coarse, "refined": refined, "growth": growth}
    checks = [
        _check_pred("count_le_pairs", coarse["distinct"],
                    f"<= {coarse['pairs']}", coarse["distinct"] <= coarse["pairs"]),
        _check_pred("refinement_growth", growth, f"< {cfg['growth_tol']}",
                    growth < cfg["growth_tol"]),
    ]
    return res, checks, []


def _frame_fraction(seed, n, grid, x_span):
    params = ScalingParams(n)
    xs = np.linspace(-x_span, x_span, grid)
    starts = [landscape_point_to_lattice(x, 0.0, params) for x in xs]
    ends = [landscape_point_to_lattice(x, 1.0, params) for x in xs]
    los = starts + ends
    lo = LatticePoint(min(p.i for p in los), min(p.j for p in los))
    hi = LatticePoint(max(p.i for p in los), max(p.j for p in los))
    window = Window(lo, hi)
    X = WeightField(seed, window)
    return stats.frame_coverage(X, window, starts, ends)


def cmd_frame(cfg, out, pmap):
    f1 = _frame_fraction(cfg["seed"], cfg["n"], cfg["grid"], cfg["x_span"])
    f4 = _frame_fraction(cfg["seed"], 4 * cfg["n"], cfg["grid"], cfg["x_span"])
    res = {"n": cfg["n"], "fraction": f1["fraction"],
           "fraction_4n": f4["fraction"], "covered": f1["covered"],
           "covered_4n": f4["covered"]}
    checks = [
        _check_pred("strictly_below_one", f1["fraction"], "< 1",
                    f1["fraction"] < 1.0),
        _check_pred("strictly_below_one_4n", f4["fraction"], "< 1",
                    f4["fraction"] < 1.0),
        _check_pred("decreasing_in_n", (f1["fraction"], f4["fraction"]),
                    "fraction(4n) < fraction(n)",
                    f4["fraction"] < f1["fraction"]),
    ]
    return res, checks, []


def cmd_one_ended(cfg, out, pmap):
    k, sp = cfg["k"], cfg["spacing"]
    span = sp * (k - 1)
    heights = [f * span for f in _ints(cfg["height_factors"])]
    seeds = [derive_seed(cfg["seed"], s) for s in range(cfg["seeds"])]
    runs = list(pmap(lambda sd: stats.portrait_one_endedness(sd, heights, k, sp),
                     seeds))
    fr = np.array([r["fractions"] for r in runs])
    mean_fr = fr.mean(axis=0)
    _io.write_csv(os.path.join(out, "height_fraction.csv"),
                  ["height", "fraction"], list(zip(heights, mean_fr)))
    nondec = bool(np.all(np.diff(fr, axis=1) >= 0))
    res = {"heights": heights, "mean_fractions": mean_fr.tolist(),
           "per_seed_nondecreasing": nondec, "seeds": cfg["seeds"]}
    checks = [
        _check_pred("coalescence_fraction", float(mean_fr[-1]),
                    f">= {cfg['threshold']}", mean_fr[-1] >= cfg["threshold"]),
        _check_pred("nondecreasing_in_height", fr.tolist(),
                    "fractions nondecreasing for every seed", nondec),
    ]
    return res, checks, ["height_fraction.csv"]


def cmd_export(cfg, out, pmap):
    size, k, what = cfg["size"], cfg["k"] or 4 * cfg["size"], cfg["what"]
    window = Window.centered(size)
    X = _field_for_window(cfg["seed"], window, 2 * k + 2)
    files = []
    if what == "tree":
        tree = build_tree(X, window, "down", k)
        _io.write_csv(os.path.join(out, "tree.csv"), ["i", "j", "step"],
                      [(p.i, p.j, tree.step(p)) for p in window.points()])
        files.append("tree.csv")
    elif what == "busemann":
        B = busemann_field(X, window, k)
        _io.write_csv(os.path.join(out, "busemann.csv"), ["i", "j", "value"],
                      [(p.i, p.j, B.value(p)) for p in window.points()])
        files.append("busemann.csv")
    elif what == "duals":
        B = busemann_field(X, window.grow(0, 1, 0, 1), k)
        xt = dual_weights(B, window)
        _io.write_csv(os.path.join(out, "duals.csv"), ["i", "j", "weight"],
                      [(b.i + 0.5, b.j + 0.5, xt.value(DualPoint(b)))
                       for b in window.points()])
        files.append("duals.csv")
    elif what == "geodesic":
        path = geodesic(X, window.lo, window.hi)
        m, x = path.rotated()
        _io.write_csv(os.path.join(out, "geodesic.csv"), ["m", "x"],
                      list(zip(m, x)))
        files.append("geodesic.csv")
    elif what == "table":
        table = passage_table(X, window.lo, "from_source", window)
        _io.write_csv(os.path.join(out, "table.csv"), ["i", "j", "value"],
                      [(p.i, p.j, table.value(p)) for p in window.points()])
        files.append("table.csv")
    elif what == "weights":
        _io.write_csv(os.path.join(out, "weights.csv"), ["i", "j", "weight"],
                      [(p.i, p.j, X.weight(p)) for p in window.points()])
        files.append("weights.csv")
    else:
        raise KpzlabError(f"unknown export kind {what!r}")
    return {"exported": files}, [], files


COMMANDS = {
    "simulate": cmd_simulate,
    "duality": cmd_duality,
    "dimension": cmd_dimension,
    "exponent": cmd_exponent,
    "holder": cmd_holder,
    "occupation": cmd_occupation,
    "busemann": cmd_busemann,
    "highways": cmd_highways,
    "frame": cmd_frame,
    "one-ended": cmd_one_ended,
    "export": cmd_export,
}


# ---------------------------------------------------------------------------
# configuration plumbing

def _build_parser():
    p = argparse.ArgumentParser(prog="kpzlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="JSON config file with flat keys mirroring flags")
        sp.add_argument("--out", default="out")
        sp.add_argument("--threads", default=None)
        sp.add_argument("--skip-checks", action="store_true", default=False)
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(val, bool):
                sp.add_argument(flag, action="store_true", default=None)
            else:
                sp.add_argument(flag, default=None)
    return p


def _coerce(cmd, key, value):
    if key == "seed":
        return int(str(value), 0) & 0xFFFFFFFFFFFFFFFF
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if isinstance(DEFAULTS[cmd].get(key), bool):
        return bool(value)
    return value


def resolve_config(cmd, args) -> dict:
    cfg = dict(DEFAULTS[cmd])
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise KpzlabError(f"config file {args.config}: {e}") from e
        for key, val in loaded.items():
            if key not in cfg:
                raise KpzlabError(
                    f"config file {args.config}: unknown field {key!r} "
                    f"for command {cmd!r}")
            cfg[key] = val
    for key in DEFAULTS[cmd]:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            cfg[key] = flag_val
    for key in list(cfg):
        try:
            cfg[key] = _coerce(cmd, key, cfg[key])
        except (TypeError, ValueError) as e:
            raise KpzlabError(f"config field {key!r}: {e}") from e
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cmd = args.command
    try:
        cfg = resolve_config(cmd, args)
    except KpzlabError as e:
        print(f"kpzlab: invalid config: {e}", file=sys.stderr)
        return 2
    out = args.out
    os.makedirs(out, exist_ok=True)
    pmap = make_map(args.threads)
    lock = dict(cfg)
    lock["command"] = cmd
    h = _io.config_hash(lock)
    lock["config_hash"] = h
    _io.write_json(os.path.join(out, "config.lock.json"), lock)
    t0 = time.time()
    try:
        results, checks, files = COMMANDS[cmd](cfg, out, pmap)
    except KpzlabError as e:
        print(f"kpzlab {cmd}: {type(e).__name__}: {e}", file=sys.stderr)
        extra = getattr(e, "primal_certificate", None)
        if extra is not None:
            print(f"  primal certificate: {extra.to_dict()}", file=sys.stderr)
            print(f"  dual certificate: {e.dual_certificate.to_dict()}",
                  file=sys.stderr)
        return 1
    elapsed = time.time() - t0
    report = {"command": cmd, "config_hash": h, "results": results,
              "checks": checks,
              "all_passed": all(c["passed"] for c in checks)}
    _io.write_json(os.path.join(out, "report.json"), report)
    _io.write_json(os.path.join(out, "timing.json"),
                   {"elapsed_seconds": elapsed, "threads": thread_count(args.threads)})
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: expected={c['expected']} "
              f"observed={c['observed']} tolerance={c['tolerance']}")
    if not checks:
        print(f"{cmd}: wrote {', '.join(files) if files else 'report.json'}")
    if args.skip_checks:
        return 0
    return 0 if all(c["passed"] for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
