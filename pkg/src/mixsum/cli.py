"""Command-line pipeline: sample, summarize, project, cluster, evaluate.

Stages communicate only through files in the output directory, so any
stage can be rerun on its own and an external sampler can stand in for
``sample`` by supplying ``bundle.jsonl``::

    mixsum pipeline --config run.yaml --figures
    mixsum summarize --config run.yaml --k-star 4

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import (
    conditional_posterior_allocate,
    kmeans_fit,
    kmeans_posterior_allocate,
    read_allocation,
    write_allocation,
)
from .config import PipelineConfig, config_from_dict, load_config
from .discrepancy import discrepancy_samples, select_k_star, write_elbow, write_elbow_raw
from .errors import NumericalError, ValidationError
from .evaluation import adjusted_rand_index, classification_error, hellinger_mc, write_scores
from .kernels import RngStream
from .projection import (
    align_labels,
    default_grid,
    density_ribbon,
    project_posterior,
    read_summary_set,
    write_ribbon,
    write_summary_set,
)
from .reference_models import (
    GENERATORS,
    dpm_gibbs,
    dpm_gibbs_mv,
    export_bundle,
    ingest_bundle,
    load_fixture,
    predictive_sample,
    read_dataset_csv,
    sim_bivariate_truth,
    sim_univariate_truth,
    write_dataset_csv,
)
from .summary_fit import fit_summary_sequence, record_to_summary, summary_to_record

log = logging.getLogger("mixsum")

STAGES = ("sample", "summarize", "project", "cluster", "evaluate")

# stream ids of the independent random streams used by the stages
STREAM_DATA = 1
STREAM_SAMPLER = 2
STREAM_PREDICTIVE = 3
STREAM_SUMMARY = 4
STREAM_PROJECTION = 5
STREAM_KMEANS_POSTERIOR = 6
STREAM_KMEANS_POINT = 7
STREAM_TRUTH = 8

TRUTHS = {"sim_univariate": sim_univariate_truth, "sim_bivariate": sim_bivariate_truth}


class Run:
    """Paths and random streams of one configured run."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        return self.out / name

    def stream(self, stream_id):
        return RngStream(self.cfg.seed, stream_id)

    def need(self, name, stage):
        p = self.path(name)
        if not p.exists():
            raise ValidationError(f"{p}: missing; run the {stage} stage first")
        return p

    # -- shared readers ---------------------------------------------------

    def data(self):
        meta = json.loads(self.need("data.json", "sample").read_text())
        return read_dataset_csv(self.path("data.csv"), labels=meta["labels"])

    def bundle(self):
        return ingest_bundle(self.need("bundle.jsonl", "sample"))

    def summaries(self):
        p = self.need("summaries.jsonl", "summarize")
        with p.open() as fh:
            return [record_to_summary(json.loads(line), str(p), i) for i, line in enumerate(fh, start=1)]

    def selection(self):
        return json.loads(self.need("selection.json", "summarize").read_text())

    def predictive(self):
        return read_dataset_csv(self.need("predictive.csv", "summarize"))


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_data(cfg):
    d = cfg.data
    if d.generator is not None:
        seed = cfg.seed if d.seed is None else d.seed
        return GENERATORS[d.generator](d.n, RngStream(seed, STREAM_DATA)), f"generator:{d.generator}"
    if d.fixture is not None:
        return load_fixture(d.fixture), f"fixture:{d.fixture}"
    return read_dataset_csv(d.csv, labels=d.labels), f"csv:{d.csv}"


# ---------------------------------------------------------------------------
# Stages


def cmd_sample(run: Run):
    """Write data.csv and bundle.jsonl (plus chain.csv for built-in samplers)."""
    cfg = run.cfg
    data, source = _load_data(cfg)
    write_dataset_csv(data, run.path("data.csv"))
    _write_json(run.path("data.json"), {"n": data.n, "d": data.d, "labels": data.labels is not None, "source": source})
    m = cfg.model
    trace = None
    if m.type == "bundle":
        bundle = ingest_bundle(m.bundle)
        if bundle.d != data.d:
            raise ValidationError(f"model.bundle: bundle has d={bundle.d}, data have d={data.d}")
    elif m.type == "dpm":
        bundle, trace = dpm_gibbs(data, m.dpm, run.stream(STREAM_SAMPLER), return_trace=True)
    else:
        bundle, trace = dpm_gibbs_mv(data, m.dpm_mv, run.stream(STREAM_SAMPLER), return_trace=True)
    export_bundle(bundle, run.path("bundle.jsonl"))
    if trace is not None:
        with run.path("chain.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep", "n_clusters", "alpha"])
            for i, (k, a) in enumerate(zip(trace.n_clusters, trace.alpha), start=1):
                w.writerow([i, int(k), repr(float(a))])
    log.info("sample: %s, N=%d, d=%d, M=%d draws", source, data.n, data.d, bundle.M)
    return bundle


def cmd_summarize(run: Run):
    """Fit k = 1..k_max summaries, compute the discrepancy table and select K*."""
    cfg = run.cfg
    s = cfg.summary
    bundle = run.bundle()
    pred = predictive_sample(bundle, s.n_predictive, run.stream(STREAM_PREDICTIVE))
    write_dataset_csv(pred, run.path("predictive.csv"))
    seq = fit_summary_sequence(pred, s.k_max, s.em, run.stream(STREAM_SUMMARY))
    with run.path("summaries.jsonl").open("w") as fh:
        for g in seq:
            fh.write(json.dumps(summary_to_record(g, g.k)) + "\n")
    table = discrepancy_samples(bundle, seq, pred)
    k_star = select_k_star(table, s.delta, s.sd_cap, s.k_star)
    write_elbow_raw(table, run.path("elbow_raw.csv"))
    write_elbow(table, run.path("elbow.csv"))
    _write_json(
        run.path("selection.json"),
        {
            "k_star": k_star,
            "by_rule": table.by_rule,
            "forced": table.forced,
            "delta": table.delta,
            "sd_cap": table.sd_cap,
            "mean_d": [float(v) for v in table.mean],
            "sd_d": [float(v) for v in table.sd],
        },
    )
    if not table.by_rule and not table.forced:
        log.warning("summarize: no k met the selection rule; using argmax of the mean discrepancy")
    if cfg.figures:
        from .plotting import plot_elbow

        plot_elbow(table, run.path("elbow.png"))
    log.info("summarize: K* = %d", k_star)
    return table


def cmd_project(run: Run):
    """Project every draw onto K* components; write the set and the ribbon."""
    cfg = run.cfg
    p = cfg.projection
    bundle = run.bundle()
    k_star = int(run.selection()["k_star"])
    summaries = run.summaries()
    estimate = summaries[k_star - 1]
    warm = estimate if p.warm_start else None
    pset = project_posterior(
        bundle, k_star, p.h, cfg.projection_em(), warm, run.stream(STREAM_PROJECTION), cfg.threads
    )
    pset = align_labels(pset)
    write_summary_set(pset, run.path("posterior_summaries.jsonl"))
    if pset.failed:
        log.warning("project: %d draw(s) failed and were skipped", len(pset.failed))
    data = run.data()
    if p.grid is not None:
        grid = read_dataset_csv(p.grid).points
    elif data.d == 1:
        grid = default_grid(data)
    else:
        log.info("project: no ribbon grid for d=%d; set projection.grid to a CSV of grid points", data.d)
        return pset, None
    ribbon = density_ribbon(pset, grid)
    write_ribbon(ribbon, run.path("ribbon.csv"))
    ref = np.exp(bundle.log_mean_density(grid))
    est = estimate.pdf(grid)
    with run.path("reference_density.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["y"] if grid.shape[1] == 1 else [f"y{j + 1}" for j in range(grid.shape[1])]
        w.writerow(cols + ["posterior_predictive", "summary_estimate"])
        for i in range(grid.shape[0]):
            w.writerow([repr(float(v)) for v in grid[i]] + [repr(float(ref[i])), repr(float(est[i]))])
    log.info("project: M=%d, reference inside ribbon at %.1f%% of grid", pset.M, 100 * ribbon.contains(ref).mean())
    if cfg.figures and grid.shape[1] == 1:
        from .plotting import plot_ribbon

        plot_ribbon(ribbon, run.path("ribbon.png"), reference=ref, estimate=est, data=data.points)
    return pset, ribbon


def cmd_cluster(run: Run):
    """Conditional-probability and k-means allocation reports."""
    cfg = run.cfg
    data = run.data()
    k_star = int(run.selection()["k_star"])
    summaries = run.summaries()
    pset = read_summary_set(run.need("posterior_summaries.jsonl", "project"))
    cond = conditional_posterior_allocate(pset, data, point_summary=summaries[k_star - 1])
    write_allocation(cond, data.points, run.path("allocation_conditional.csv"))
    point = kmeans_fit(run.predictive(), k_star, run.stream(STREAM_KMEANS_POINT), cfg.clustering.restarts)
    km = kmeans_posterior_allocate(
        run.bundle(),
        k_star,
        cfg.clustering.h,
        data,
        run.stream(STREAM_KMEANS_POSTERIOR),
        cfg.clustering.restarts,
        point_centroids=point,
    )
    write_allocation(km, data.points, run.path("allocation_kmeans.csv"))
    if cfg.figures and data.d <= 2:
        from .plotting import plot_allocation

        plot_allocation(cond, data.points, run.path("allocation_conditional.png"))
        plot_allocation(km, data.points, run.path("allocation_kmeans.png"))
    log.info("cluster: mean uncertainty conditional %.3f, kmeans %.3f", cond.uncertainty.mean(), km.uncertainty.mean())
    return cond, km


def cmd_evaluate(run: Run):
    """Hellinger distances (known truth) and ARI/err (known labels)."""
    cfg = run.cfg
    data = run.data()
    rows = []
    base = {"replicate": cfg.seed, "N": data.n}
    design = cfg.truth_design
    if design is not None:
        truth = TRUTHS[design]()
        if truth.dim != data.d:
            raise ValidationError(f"evaluation.truth: design {design} has d={truth.dim}, data have d={data.d}")
        ts = truth.sample(cfg.evaluation.n_truth_samples, run.stream(STREAM_TRUTH))
        k_star = int(run.selection()["k_star"])
        candidates = [
            ("summary_estimate", run.summaries()[k_star - 1].logpdf),
            ("posterior_predictive", run.bundle().log_mean_density),
        ]
        pset_path = run.path("posterior_summaries.jsonl")
        if pset_path.exists():
            candidates.insert(1, ("posterior_summary_mean", read_summary_set(pset_path).mean_logpdf))
        for name, fn in candidates:
            rows.append({**base, "model": name, "score": hellinger_mc(truth, fn, ts)})
    else:
        log.info("evaluate: no known truth; Hellinger skipped")
    if data.labels is not None:
        for loss in ("conditional", "kmeans"):
            p = run.path(f"allocation_{loss}.csv")
            if not p.exists():
                log.info("evaluate: %s missing; run the cluster stage first", p.name)
                continue
            alloc = read_allocation(p)
            for kind in ("pointest", "modal"):
                lab = alloc[f"label_{kind}"]
                for fn in (adjusted_rand_index, classification_error):
                    rows.append({**base, "model": f"{loss}_{kind}", "score": fn(data.labels, lab)})
    else:
        log.info("evaluate: data carry no labels; ARI and err skipped")
    write_scores(rows, run.path("scores.csv"))
    for r in rows:
        log.info("evaluate: %-24s %-9s %.4f", r["model"], r["score"].metric, r["score"].value)
    return rows


COMMANDS = {
    "sample": cmd_sample,
    "summarize": cmd_summarize,
    "project": cmd_project,
    "cluster": cmd_cluster,
    "evaluate": cmd_evaluate,
}


def cmd_pipeline(run: Run):
    for stage in STAGES:
        COMMANDS[stage](run)


COMMANDS["pipeline"] = cmd_pipeline


# ---------------------------------------------------------------------------
# Argument handling


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixsum",
        description="Summarize mixture-model posteriors with finite Gaussian mixtures.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "pipeline"):
        doc = (COMMANDS[name].__doc__ or "run all stages in order").strip().splitlines()[0]
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("-c", "--config", help="YAML configuration file")
        p.add_argument("-o", "--output-dir", help="output directory (overrides config and environment)")
        p.add_argument("--seed", type=int, help="global seed")
        p.add_argument("--threads", type=int, help="worker threads for per-draw work (results do not depend on it)")
        p.add_argument("--figures", action="store_true", default=None, help="also render PNG figures")
        p.add_argument("-v", "--verbose", action="count", default=0)
        src = p.add_argument_group("quick data/model selection (instead of a config file)")
        src.add_argument("--generator", choices=sorted(GENERATORS), help="built-in simulation design")
        src.add_argument("--n", type=int, help="sample size for --generator")
        src.add_argument("--csv", help="headerless data CSV")
        src.add_argument("--labels", action="store_true", default=None, help="CSV has a trailing label column")
        src.add_argument("--fixture", help="bundled dataset (galaxy)")
        src.add_argument("--bundle", help="ingest this draw bundle instead of running a sampler")
        src.add_argument("--model", choices=["dpm", "dpm_mv"], help="built-in sampler")
        opt = p.add_argument_group("summary options")
        opt.add_argument("--k-max", type=int)
        opt.add_argument("--k-star", type=int, help="force K* instead of the selection rule")
        opt.add_argument("--delta", type=float)
    return parser


def resolve_config(args, env=None):
    """Config file (or defaults), then environment, then command-line flags."""
    if args.config:
        cfg = load_config(args.config, env)
    else:
        cfg = config_from_dict({}, env)
    for src in ("generator", "csv", "fixture"):
        if getattr(args, src) is not None:
            cfg.data.generator = cfg.data.csv = cfg.data.fixture = None
            setattr(cfg.data, src, getattr(args, src))
    if args.n is not None:
        cfg.data.n = args.n
    if args.labels is not None:
        cfg.data.labels = args.labels
    if args.bundle is not None:
        cfg.model.type, cfg.model.bundle = "bundle", args.bundle
    elif args.model is not None:
        cfg.model.type, cfg.model.bundle = args.model, None
    overrides = {
        "output_dir": args.output_dir,
        "seed": args.seed,
        "threads": args.threads,
        "figures": args.figures,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.k_max is not None:
        cfg.summary.k_max = args.k_max
    if args.k_star is not None:
        cfg.summary.k_star = args.k_star
    if args.delta is not None:
        cfg.summary.delta = args.delta
    return cfg.validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](Run(cfg))
    except ValidationError as exc:
        print(f"mixsum: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"mixsum: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
