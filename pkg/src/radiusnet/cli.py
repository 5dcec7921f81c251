"""Command-line interface: ``radiusnet <command> ...``.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .community import COMMUNITY_METHODS, comparison_matrix, write_partition
from .config import load_config, parse_override
from .estimators import RadiusModel, score_pairs
from .evaluation import METHODS, LinkScoreSet, crossval, quantile_auc, roc_auc
from .graph import GraphFormatError, load_graph, pairwise_distances, spatial_stats, write_graph
from .model import ModelContext
from .sampler import derive_seed, read_trace, trace_summary, write_trace
from .synth import generate_batch, generate_network, prior_sensitivity_experiment

log = logging.getLogger("radiusnet")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Run:
    """Output directory, overwrite guard and manifest for one command."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.force = args.force
        self.inputs = {}
        self.warnings = []
        self.written = []
        self.start = time.perf_counter()

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = _sha256(path)

    def path(self, name):
        p = self.out / name
        if p.exists() and not self.force:
            raise InputError(f"{p} exists; pass --force to overwrite")
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(name)
        return p

    def write_json(self, name, obj):
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_rows(self, name, header, rows):
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def finish(self, config):
        manifest = {
            "command": self.args.command,
            "argv": self.args.argv,
            "config": config,
            "seed": self.args.seed,
            "inputs": self.inputs,
            "outputs": sorted(self.written),
            "version": __version__,
            "duration_s": round(time.perf_counter() - self.start, 3),
            "warnings": self.warnings,
        }
        if getattr(self, "fingerprint", None):
            manifest["graph_fingerprint"] = self.fingerprint
        self.write_json("manifest.json", manifest)


def _load(run, args):
    run.add_input(args.nodes)
    run.add_input(args.edges)
    g = load_graph(args.nodes, args.edges)
    run.fingerprint = g.fingerprint()
    return g


def _config(args):
    return load_config(args.config, [parse_override(s) for s in args.set])


def _quantile_rows(tables):
    rows = []
    for axis in ("distance", "degree_product"):
        for b in tables[axis]:
            rows.append([axis, b["bin"], b["lower"], b["upper"], b["n_pos"], b["n_neg"],
                         "" if b["auc"] is None else repr(b["auc"])])
    return rows


QUANTILE_HEADER = ["axis", "bin", "lower", "upper", "n_pos", "n_neg", "auc"]


def cmd_analyze(args, run):
    g = _load(run, args)
    stats = spatial_stats(g, args.grid)
    d = stats.to_dict()
    linked = d.pop("linked_distances")
    run.write_json("analysis.json", d)
    run.write_rows("linked_distances.csv", ["distance"], [[repr(v)] for v in sorted(linked)])
    if stats.index_of_dispersion is None:
        run.warnings.append("index of dispersion undefined for this layout")
    return {"grid": list(stats.quadrat_grid)}


def _fit_model(g, cfg, args, communities):
    params = cfg.model_params()
    return RadiusModel(communities=communities, sampler=cfg.sampler(args.seed),
                       random_state=args.seed, **params).fit(g)


def cmd_fit(args, run):
    cfg = _config(args)
    g = _load(run, args)
    model = _fit_model(g, cfg, args, args.model == "RadiusComms")
    write_trace(model.trace_, run.path("trace.jsonl"))
    summary = trace_summary(model.trace_)
    summary["model"] = args.model
    summary["degree_term"] = model.degree_term
    summary["M"] = model.context_.M
    summary["priors"] = model.priors_.to_dict()
    summary["sampler"] = model.sampler_.to_dict()
    summary["init_log_post"] = [float(v) for v in model.init_trace_.log_posts] if model.init_trace_ else []
    run.write_json("summary.json", summary)
    return {"config": cfg.to_dict(), "model": args.model}


def _read_edge_ids(path, g):
    idx = {nid: k for k, nid in enumerate(g.node_ids)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["src", "dst"]:
            raise GraphFormatError(f"{path}:1: expected header 'src,dst'")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise GraphFormatError(f"{path}:{reader.line_num}: expected 2 fields")
            a, b = row[0].strip(), row[1].strip()
            for nid in (a, b):
                if nid not in idx:
                    raise GraphFormatError(f"{path}:{reader.line_num}: unknown node id {nid!r}")
            if a == b:
                raise GraphFormatError(f"{path}:{reader.line_num}: self-loop on {a!r}")
            i, j = sorted((idx[a], idx[b]))
            out.append((i, j))
    return np.array(sorted(set(out)), dtype=np.int64).reshape(-1, 2)


def cmd_predict(args, run):
    cfg = _config(args)
    g = _load(run, args)
    run.add_input(args.trace)
    run.add_input(args.test_edges)
    trace = read_trace(args.trace)
    if trace.radii.shape[1] != g.n_nodes:
        raise InputError("trace does not match the graph's node count")
    test = _read_edge_ids(args.test_edges, g)
    if len(test) == 0:
        raise InputError("no test edges")
    if g.adjacency[test[:, 0], test[:, 1]].any():
        raise InputError("test edges must be absent from the training graph")
    ctx = ModelContext(g, degree_term=cfg.model_params().get("degree_term", True))
    held = np.zeros((g.n_nodes, g.n_nodes), dtype=bool)
    held[test[:, 0], test[:, 1]] = True
    iu = np.triu_indices(g.n_nodes, k=1)
    neg = ~g.adjacency[iu] & ~held[iu]
    pairs = np.vstack([test, np.column_stack([iu[0][neg], iu[1][neg]])])
    truth = np.r_[np.ones(len(test)), np.zeros(int(neg.sum()))]
    scores = score_pairs(trace, ctx, pairs, args.scoring)
    k = g.degrees.astype(float)
    ss = LinkScoreSet(pairs[:, 0], pairs[:, 1], scores, truth,
                      pairwise_distances(g).pairs(pairs[:, 0], pairs[:, 1]),
                      k[pairs[:, 0]] * k[pairs[:, 1]])
    tables = {a: quantile_auc(ss, a, args.bins) for a in ("distance", "degree_product")}
    run.write_json("predict.json", {"auc": roc_auc(ss), "scoring": args.scoring,
                                    "n_pos": len(test), "n_neg": int(neg.sum()),
                                    "quantiles": tables})
    ss.to_csv(run.path("scores.csv"), g.node_ids)
    run.write_rows("quantiles.csv", QUANTILE_HEADER, _quantile_rows(tables))
    return {"config": cfg.to_dict(), "scoring": args.scoring, "bins": args.bins}


def cmd_crossval(args, run):
    cfg = _config(args)
    g = _load(run, args)
    cv = cfg.cv(args.seed, args.jobs)
    params = cfg.model_params()
    summary = {}
    for method in args.methods:
        mp = None
        if method in ("Radius", "RadiusComms"):
            mp = {**params, "sampler": cfg.sampler(args.seed)}
        report, scores = crossval(g, method, cv, model_params=mp, return_scores=True)
        d = report.to_dict()
        run.write_json(f"cv_{method}.json", d)
        rows = []
        for f, ss in enumerate(scores):
            for a, b, s, t, dist, kk in zip(ss.i, ss.j, ss.score, ss.truth, ss.distance, ss.deg_product):
                rows.append([f, g.node_ids[a], g.node_ids[b], repr(float(s)), int(t), repr(float(dist)), repr(float(kk))])
        run.write_rows(f"scores_{method}.csv", ["fold", "i", "j", "score", "truth", "distance", "deg_product"], rows)
        qrows = []
        for axis, vals in d["mean_quantile_auc"].items():
            for b, v in enumerate(vals, 1):
                qrows.append([axis, b, "" if v is None else repr(v)])
        run.write_rows(f"quantiles_{method}.csv", ["axis", "bin", "mean_auc"], qrows)
        summary[method] = {"mean_auc": d["mean_auc"], "sd_auc": d["sd_auc"], "fold_auc": d["fold_auc"]}
    run.write_json("crossval.json", summary)
    return {"config": cfg.to_dict(), "cv": cv.to_dict(), "methods": args.methods}


def cmd_communities(args, run):
    cfg = _config(args)
    g = _load(run, args)
    params = {**cfg.model_params(), "sampler": cfg.sampler(args.seed)}
    res = comparison_matrix(g, args.methods, seed=args.seed, model_params=params)
    for name, part in res["partitions"].items():
        write_partition(part, g.node_ids, run.path(f"partition_{name}.csv"))
    methods = res["methods"]
    run.write_rows("nmi_full.csv", ["method"] + methods,
                   [[m] + [repr(float(v)) for v in row] for m, row in zip(methods, res["nmi"])])
    if res["nmi_restricted"] is not None:
        run.write_rows("nmi_restricted.csv", ["method"] + methods,
                       [[m] + [repr(float(v)) for v in row] for m, row in zip(methods, res["nmi_restricted"])])
    run.write_json("communities.json", {
        "methods": methods,
        "normalization": res["normalization"],
        "nmi": res["nmi"],
        "nmi_restricted": res["nmi_restricted"],
        "restricted_size": res["restricted_size"],
        "n_communities": {m: p.n_communities for m, p in res["partitions"].items()},
    })
    return {"config": cfg.to_dict(), "methods": methods}


def _write_network(run, prefix, res, spec):
    write_graph(res.graph, run.path(f"{prefix}nodes.csv"), run.path(f"{prefix}edges.csv"))
    run.write_json(f"{prefix}truth.json", {
        "params": res.truth.to_dict(),
        "spec": spec.to_dict(),
        "degree_mode": res.degree_mode,
        "iterations": res.iterations,
        "converged": res.converged,
    })
    run.warnings.extend(res.warnings)


def cmd_generate(args, run):
    cfg = _config(args)
    if args.config:
        run.add_input(args.config)
    spec = cfg.genspec(args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if args.count == 1:
            _write_network(run, "", generate_network(spec), spec)
        else:
            for k, res in enumerate(generate_batch(spec, args.count)):
                _write_network(run, f"net_{k:03d}/", res, spec.with_seed(derive_seed(spec.seed, k)))
    return {"config": cfg.to_dict(), "count": args.count}


def cmd_prior_sens(args, run):
    cfg = _config(args)
    if args.config:
        run.add_input(args.config)
    spec = cfg.genspec(args.seed)
    if len(args.prior_mean) < 2:
        raise InputError("need at least two --prior-mean values")
    sd = math.sqrt(args.prior_var)
    settings = [{"mu_alpha": m, "sigma_alpha": sd} for m in args.prior_mean]
    report = prior_sensitivity_experiment(spec, settings, cfg.sampler(args.seed), count=args.count,
                                          init_iters=cfg.model_params().get("init_iters", 500))
    run.write_json("prior_sens.json", report)
    rows = []
    for si, s in enumerate(report["settings"]):
        for r in s["runs"]:
            a = r["alpha"]
            rows.append([si, s["prior"]["mu_alpha"], r["network"], repr(a["true"]), repr(a["mode"]),
                         repr(a["mean"]), repr(a["rel_error"])])
    run.write_rows("prior_sens.csv", ["setting", "prior_mean", "network", "true", "mode", "mean", "rel_error"], rows)
    return {"config": cfg.to_dict(), "prior_mean": args.prior_mean, "prior_var": args.prior_var}


def build_parser():
    p = _Parser(prog="radiusnet", description="Latent-radius spatial network models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=True, config=True):
        if graph:
            sp.add_argument("--nodes", required=True, help="node CSV with header id,x,y")
            sp.add_argument("--edges", required=True, help="edge CSV with header src,dst")
        if config:
            sp.add_argument("--config", help="TOML config with dotted keys")
            sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                            help="config override, repeatable")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("analyze", help="spatial statistics of a graph")
    common(sp, config=False)
    sp.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("fit", help="fit Radius or Radius+Comms by MCMC")
    common(sp)
    sp.add_argument("--model", choices=["Radius", "RadiusComms"], default="Radius")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="score held-out edges with a fitted trace")
    common(sp)
    sp.add_argument("--trace", required=True)
    sp.add_argument("--test-edges", required=True, help="held-out edge CSV with header src,dst")
    sp.add_argument("--scoring", choices=["predictive", "map"], default="predictive")
    sp.add_argument("--bins", type=int, default=5)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("crossval", help="k-fold link-prediction cross-validation")
    common(sp)
    sp.add_argument("--methods", nargs="+", choices=list(METHODS), default=["Radius", "PA", "ExpDist", "EmpDist"])
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_crossval)

    sp = sub.add_parser("communities", help="community detection and NMI comparison")
    common(sp)
    sp.add_argument("--methods", nargs="+", choices=list(COMMUNITY_METHODS), default=["PA", "ExpDist", "EmpDist"])
    sp.set_defaults(func=cmd_communities)

    sp = sub.add_parser("generate", help="draw synthetic networks")
    common(sp, graph=False)
    sp.add_argument("--count", type=int, default=1)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("prior-sens", help="alpha prior-sensitivity experiment")
    common(sp, graph=False)
    sp.add_argument("--prior-mean", type=float, action="append", default=[])
    sp.add_argument("--prior-var", type=float, default=80.0)
    sp.add_argument("--count", type=int, default=10)
    sp.set_defaults(func=cmd_prior_sens)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "count", 1) < 1:
        print("radiusnet: error: --count must be positive", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "jobs", 1) < 1:
        print("radiusnet: error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    run = Run(args)
    try:
        if (run.out / "manifest.json").exists() and not args.force:
            raise InputError(f"{run.out} already holds a run; pass --force to overwrite")
        echo = args.func(args, run)
        run.finish(echo)
    except (InputError, ValueError, FileNotFoundError) as e:
        print(f"radiusnet: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"radiusnet: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
