"""Command line front end and seeded experiment harness.

Subcommands: gen, sample, learn, diagnose, eval, run, curves.  The run
subcommand executes an ExperimentPlan end to end (generate -> sample ->
recover -> evaluate) once per seed and writes one report JSON per seed
plus a summary CSV.  Exit codes: 0 ok, 2 config error, 3 budget or
feasibility error, 4 internal invariant violation.

Every output file embeds the artifact version and a hash of the
configuration that produced it.  File formats are those of the other
modules: CSV for tables, JSON for structure, '#' for comment lines.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .diagnostics import (identifiability_margin, kl_divergence,
                          mgf_flip_estimate, smoothness_fraction,
                          tail_fraction, tv_distance)
from .errors import BudgetError, ConfigError, DimensionError, InvariantError
from .generate import EnsembleSpec
from .graphs import Graph, parse_graph_spec
from .poly import IsingModel, Polynomial, ising_to_poly, l1_distance, linf_distance
from .recovery import (RecoveryConfig, RecoveryReport, exact_recover_report,
                       learn_structure_report, recover_ising, recover_mrf,
                       structure_from_poly)
from .sampler import (enumerate_distribution, load_batch,
                      sample_batch_from_model, save_batch)
from .seeds import TAG_MODEL, TAG_SAMPLES, derive_seed
from . import __version__

SUMMARY_COLUMNS = ("seed", "linf_error", "l1_error", "structure_precision",
                   "structure_recall", "kl", "tv", "wallclock_s")
PIPELINES = ("ising", "mrf", "structure", "exact")


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- model file round trip -----------------------------------------------------


def save_model_json(path, spec: EnsembleSpec | None, model) -> None:
    if isinstance(model, IsingModel):
        m = {"type": "ising", **model.to_json_dict()}
    elif isinstance(model, Polynomial):
        m = {"type": "poly", **model.to_json_dict()}
    else:
        raise ConfigError(f"cannot serialize model of type {type(model).__name__}")
    spec_d = spec.to_json_dict() if spec is not None else None
    doc = {
        "version": __version__,
        "config_hash": config_hash(spec_d if spec_d is not None else m),
        "ensemble": spec_d,
        "model": m,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_model_json(path):
    """Returns (spec or None, model as IsingModel or Polynomial)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    m = doc.get("model")
    if not isinstance(m, dict) or "type" not in m:
        # recovery reports carry a bare estimate keyed by pipeline/mode
        est, pipe = doc.get("estimate"), doc.get("pipeline") or doc.get("mode")
        if isinstance(est, dict) and pipe in ("ising", "mrf", "exact"):
            if pipe == "ising":
                return None, IsingModel.from_json_dict(est)
            return None, Polynomial.from_json_dict(est)
        if pipe == "structure":
            raise ConfigError(
                f"{path} is a structure report; an edge set has no distribution")
        raise ConfigError(f"{path} has no model entry")
    kind = m["type"]
    body = {k: v for k, v in m.items() if k != "type"}
    if kind == "ising":
        model = IsingModel.from_json_dict(body)
    elif kind == "poly":
        model = Polynomial.from_json_dict(body)
    else:
        raise ConfigError(f"unknown model type {kind!r}")
    spec = doc.get("ensemble")
    spec = EnsembleSpec.from_json_dict(spec) if spec is not None else None
    return spec, model


def _as_poly(model) -> Polynomial:
    return ising_to_poly(model) if isinstance(model, IsingModel) else model


# -- experiment plans ----------------------------------------------------------


@dataclass
class ExperimentPlan:
    ensemble: EnsembleSpec
    n_samples: int
    pipeline: str
    recovery: RecoveryConfig
    seeds: tuple
    outdir: str
    sampler: str = "exact"
    burn_in: int = 0
    thinning: int = 1
    kl_cap: int = 16
    jobs: int = 1

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("plan needs at least one seed")
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}")
        if self.sampler not in ("exact", "glauber"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "ensemble": self.ensemble.to_json_dict(),
            "n_samples": self.n_samples,
            "pipeline": self.pipeline,
            "recovery": self.recovery.to_json_dict(),
            "seeds": list(self.seeds),
            "outdir": self.outdir,
            "sampler": self.sampler,
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "kl_cap": self.kl_cap,
            "jobs": self.jobs,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> ExperimentPlan:
        d = dict(d)
        try:
            d["ensemble"] = EnsembleSpec.from_json_dict(d["ensemble"])
            d["recovery"] = RecoveryConfig.from_json_dict(d.get("recovery", {}))
            return cls(**d)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed plan: {exc}") from exc

    def hash(self) -> str:
        return config_hash(self.to_json_dict())


def _graph_metrics(est: Graph, true: Graph) -> tuple[float, float]:
    e_est, e_true = set(est.edges), set(true.edges)
    tp = len(e_est & e_true)
    precision = tp / len(e_est) if e_est else 1.0
    recall = tp / len(e_true) if e_true else 1.0
    return precision, recall


def _align(p: Polynomial, q: Polynomial) -> tuple[Polynomial, Polynomial]:
    tm = max(p.t_max, q.t_max)
    return p.with_t_max(tm), q.with_t_max(tm)


def run_seed(plan: ExperimentPlan, seed: int) -> RecoveryReport:
    """One full generate -> sample -> recover -> evaluate pass."""
    spec = plan.ensemble.with_seed(derive_seed(seed, TAG_MODEL))
    truth = _as_poly(spec.build())
    batch = sample_batch_from_model(
        spec.meta(), truth, plan.sampler, plan.n_samples,
        derive_seed(seed, TAG_SAMPLES), burn_in=plan.burn_in, thinning=plan.thinning,
    )
    cfg = plan.recovery
    if plan.pipeline == "ising":
        rep = recover_ising(batch, cfg)
        est_poly = _as_poly(rep.estimate)
    elif plan.pipeline == "mrf":
        rep = recover_mrf(batch, cfg)
        est_poly = rep.estimate
    elif plan.pipeline == "structure":
        rep = learn_structure_report(batch, cfg)
        est_poly = None
    else:
        rep = exact_recover_report(batch, spec.beta, spec.degree, cfg.t, cfg)
        est_poly = rep.estimate

    if est_poly is not None:
        a, b = _align(truth, est_poly)
        rep.linf_error = linf_distance(a, b)
        rep.l1_error = l1_distance(a, b)
        if truth.n <= plan.kl_cap:
            P = enumerate_distribution(truth, cap=plan.kl_cap)
            Q = enumerate_distribution(est_poly, cap=plan.kl_cap)
            rep.kl = kl_divergence(P, Q)
            rep.tv = tv_distance(P, Q)
    if plan.pipeline == "structure":
        prec, rec = _graph_metrics(rep.estimate, structure_from_poly(truth))
        rep.structure_precision, rep.structure_recall = prec, rec
    elif plan.pipeline == "exact":
        prec, rec = _graph_metrics(structure_from_poly(est_poly), structure_from_poly(truth))
        rep.structure_precision, rep.structure_recall = prec, rec
    return rep


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_experiment(plan: ExperimentPlan) -> dict:
    """Reports and a summary CSV under plan.outdir; returns their paths."""
    outdir = Path(plan.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    h = plan.hash()

    if plan.jobs > 1:
        with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
            reports = list(pool.map(lambda s: run_seed(plan, s), plan.seeds))
    else:
        reports = [run_seed(plan, s) for s in plan.seeds]

    report_paths = []
    rows = []
    for seed, rep in zip(plan.seeds, reports):
        doc = {"version": __version__, "config_hash": h, "seed": seed}
        doc.update(rep.to_json_dict())
        rp = outdir / f"report_seed{seed}.json"
        rp.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        report_paths.append(rp)
        rows.append({
            "seed": seed,
            "linf_error": rep.linf_error,
            "l1_error": rep.l1_error,
            "structure_precision": rep.structure_precision,
            "structure_recall": rep.structure_recall,
            "kl": rep.kl,
            "tv": rep.tv,
            "wallclock_s": rep.wallclock_s,
        })

    summary = outdir / "summary.csv"
    with summary.open("w") as f:
        f.write(f"# spinlearn v{__version__} config_hash={h} "
                f"N={plan.n_samples} beta={plan.ensemble.beta} "
                f"kind={plan.ensemble.kind} pipeline={plan.pipeline}\n")
        f.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_csv_cell(row[c]) for c in SUMMARY_COLUMNS) + "\n")
    return {"summary": summary, "reports": report_paths, "rows": rows}


def _parse_summary(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ConfigError(f"{path}: missing summary meta line")
    meta = {}
    for tok in lines[0].lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            meta[k] = v
    if len(lines) < 2 or lines[1].split(",") != list(SUMMARY_COLUMNS):
        raise ConfigError(f"{path}: summary schema mismatch")
    rows = []
    for ln in lines[2:]:
        if not ln.strip():
            continue
        vals = ln.split(",")
        if len(vals) != len(SUMMARY_COLUMNS):
            raise ConfigError(f"{path}: summary schema mismatch")
        rows.append(dict(zip(SUMMARY_COLUMNS, vals)))
    return meta, rows


def emit_curves(summary_paths, out_path) -> int:
    """Tidy long-format merge of summary CSVs; returns the row count."""
    out_rows = []
    for path in summary_paths:
        meta, rows = _parse_summary(path)
        stem = Path(path).parent.name or Path(path).stem
        for row in rows:
            run = f"{stem}/seed{row['seed']}"
            for metric in SUMMARY_COLUMNS[1:]:
                out_rows.append((run, meta.get("N", ""), meta.get("beta", ""),
                                 metric, row[metric]))
    with Path(out_path).open("w") as f:
        f.write(f"# spinlearn v{__version__} curves\n")
        f.write("run,N,beta,metric,value\n")
        for r in out_rows:
            f.write(",".join(r) + "\n")
    return len(out_rows)


# -- subcommands ---------------------------------------------------------------


def _ensemble_from_args(args) -> EnsembleSpec:
    graph = parse_graph_spec(args.graph) if args.graph else None
    return EnsembleSpec(
        kind=args.kind, beta=args.beta, seed=args.seed, n=args.n, t=args.t,
        weight_dist=args.weight_dist, field_mode=args.field_mode,
        field_mean=args.field_mean, field_sigma=args.field_sigma, graph=graph,
    )


def _cmd_gen(args) -> int:
    spec = _ensemble_from_args(args)
    model = spec.build()
    save_model_json(args.out, spec, model)
    print(f"wrote {args.out}")
    return 0


def _cmd_sample(args) -> int:
    spec, model = load_model_json(args.model)
    psi = _as_poly(model)
    meta = spec.meta() if spec is not None else {}
    batch = sample_batch_from_model(meta, psi, args.sampler, args.n_samples,
                                    args.seed, burn_in=args.burn_in,
                                    thinning=args.thinning)
    note = f"spinlearn v{__version__} config_hash={config_hash(batch.meta)}"
    save_batch(batch, args.out, header_note=note)
    print(f"wrote {args.out} ({batch.n_samples} x {batch.n})")
    return 0


def _recovery_from_args(args) -> RecoveryConfig:
    return RecoveryConfig(
        t=args.t, epsilon=args.epsilon, delta=args.delta, lam=args.lam,
        C=args.C, eta=args.eta, K=args.K, inner_epsilon=args.inner_epsilon,
        fit_budget=not args.strict_budget, holdout_frac=args.holdout_frac,
        max_candidates=args.max_candidates,
    )


def _cmd_learn(args) -> int:
    batch = load_batch(args.data)
    cfg = _recovery_from_args(args)
    info = batch.meta.get("ensemble", {})
    if args.pipeline == "ising":
        rep = recover_ising(batch, cfg)
    elif args.pipeline == "mrf":
        rep = recover_mrf(batch, cfg)
    elif args.pipeline == "structure":
        rep = learn_structure_report(batch, cfg)
    elif args.pipeline == "exact":
        beta = args.beta if args.beta is not None else info.get("beta")
        d = args.d if args.d is not None else info.get("d")
        if beta is None or d is None:
            raise ConfigError("exact pipeline needs --beta and --d (or batch ensemble meta)")
        rep = exact_recover_report(batch, float(beta), int(d), cfg.t, cfg)
    else:
        raise ConfigError(f"unknown pipeline {args.pipeline!r}")

    if args.truth:
        _, truth_model = load_model_json(args.truth)
        truth = _as_poly(truth_model)
        if args.pipeline == "structure":
            prec, rec = _graph_metrics(rep.estimate, structure_from_poly(truth))
            rep.structure_precision, rep.structure_recall = prec, rec
        else:
            est_poly = _as_poly(rep.estimate)
            a, b = _align(truth, est_poly)
            rep.linf_error = linf_distance(a, b)
            rep.l1_error = l1_distance(a, b)

    doc = {"version": __version__, "config_hash": config_hash(cfg.to_json_dict()),
           "pipeline": args.pipeline}
    doc.update(rep.to_json_dict())
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_diagnose(args) -> int:
    _, model = load_model_json(args.model)
    psi = _as_poly(model)
    source = load_batch(args.data) if args.data else None
    rep = smoothness_fraction(psi, args.C, args.t, source)
    singles = [(i,) for i in range(psi.n)]
    mgf_max, overflow = 1.0, False
    tail_max = 0.0
    for S in singles:
        m = mgf_flip_estimate(psi, S, args.B, source)
        mgf_max = max(mgf_max, m.estimate)
        overflow = overflow or m.overflow
        if args.threshold is not None:
            tail_max = max(tail_max, tail_fraction(psi, S, args.threshold, source))
    doc = {
        "version": __version__,
        "config_hash": config_hash({"model": args.model, "C": args.C, "t": args.t, "B": args.B}),
        "smoothness": rep.to_json_dict(),
        "mgf_singleton_max": mgf_max,
        "mgf_overflow": overflow,
        "tail_singleton_max": tail_max if args.threshold is not None else None,
        "tail_threshold": args.threshold,
        "identifiability_margin": identifiability_margin(psi),
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_eval(args) -> int:
    _, ma = load_model_json(args.model_a)
    _, mb = load_model_json(args.model_b)
    pa, pb = _align(_as_poly(ma), _as_poly(mb))
    doc = {
        "version": __version__,
        "l1": l1_distance(pa, pb),
        "linf": linf_distance(pa, pb),
        "kl": None,
        "tv": None,
    }
    if pa.n <= args.kl_cap:
        P = enumerate_distribution(pa, cap=args.kl_cap)
        Q = enumerate_distribution(pb, cap=args.kl_cap)
        doc["kl"] = kl_divergence(P, Q)
        doc["tv"] = tv_distance(P, Q)
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_run(args) -> int:
    try:
        plan_doc = json.loads(Path(args.plan).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read plan {args.plan}: {exc}") from exc
    plan = ExperimentPlan.from_json_dict(plan_doc)
    if not args.config_priority:
        # flags override the plan file unless told otherwise
        if args.outdir:
            plan = replace(plan, outdir=args.outdir)
        if args.seeds:
            plan = replace(plan, seeds=tuple(int(s) for s in args.seeds.split(",")))
        if args.n_samples:
            plan = replace(plan, n_samples=args.n_samples)
        if args.jobs:
            plan = replace(plan, jobs=args.jobs)
    out = run_experiment(plan)
    print(f"wrote {out['summary']} and {len(out['reports'])} reports")
    return 0


def _cmd_curves(args) -> int:
    count = emit_curves(args.summaries, args.out)
    print(f"wrote {args.out} ({count} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinlearn",
                                 description="generate / sample / learn spin models")
    ap.add_argument("--version", action="version", version=f"spinlearn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="draw a model from a random ensemble")
    g.add_argument("--kind", required=True, choices=("sk", "random_ising", "random_mrf", "pure_spin"))
    g.add_argument("--n", type=int, default=0, help="variables (complete-graph kinds)")
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--t", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--graph", default="", help="e.g. path:10, grid:3:4, regular:14:3, complete:8, or an edge-list file")
    g.add_argument("--weight-dist", default="gaussian", choices=("gaussian", "rademacher"))
    g.add_argument("--field-mode", default="zero", choices=("zero", "gaussian", "rademacher"))
    g.add_argument("--field-mean", type=float, default=0.0)
    g.add_argument("--field-sigma", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("sample", help="draw configurations from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--sampler", default="exact", choices=("exact", "glauber"))
    s.add_argument("--n-samples", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=0)
    s.add_argument("--thinning", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)

    l = sub.add_parser("learn", help="recover a model from a sample CSV")
    l.add_argument("--data", required=True)
    l.add_argument("--pipeline", required=True, choices=PIPELINES)
    l.add_argument("--t", type=int, default=2)
    l.add_argument("--epsilon", type=float, default=0.1)
    l.add_argument("--delta", type=float, default=0.1)
    l.add_argument("--lam", type=float, default=0.0)
    l.add_argument("--C", type=float, default=0.0)
    l.add_argument("--eta", type=float, default=0.0)
    l.add_argument("--K", type=int, default=0)
    l.add_argument("--inner-epsilon", type=float, default=0.0)
    l.add_argument("--holdout-frac", type=float, default=0.2)
    l.add_argument("--max-candidates", type=int, default=256)
    l.add_argument("--strict-budget", action="store_true",
                   help="fail instead of shrinking the derived sample budget")
    l.add_argument("--beta", type=float, default=None, help="exact pipeline grid scale")
    l.add_argument("--d", type=int, default=None, help="exact pipeline graph degree")
    l.add_argument("--truth", default="", help="model JSON to score the estimate against")
    l.add_argument("--out", required=True)
    l.set_defaults(func=_cmd_learn)

    d = sub.add_parser("diagnose", help="structural checks on a model file")
    d.add_argument("--model", required=True)
    d.add_argument("--C", type=float, required=True)
    d.add_argument("--t", type=int, default=2)
    d.add_argument("--B", type=float, default=32.0)
    d.add_argument("--threshold", type=float, default=None)
    d.add_argument("--data", default="", help="sample CSV for Monte Carlo mode")
    d.add_argument("--out", default="")
    d.set_defaults(func=_cmd_diagnose)

    e = sub.add_parser("eval", help="distances between two model files")
    e.add_argument("--model-a", required=True)
    e.add_argument("--model-b", required=True)
    e.add_argument("--kl-cap", type=int, default=16)
    e.add_argument("--out", default="")
    e.set_defaults(func=_cmd_eval)

    r = sub.add_parser("run", help="execute an experiment plan JSON")
    r.add_argument("--plan", required=True)
    r.add_argument("--outdir", default="")
    r.add_argument("--seeds", default="", help="comma list, overrides the plan")
    r.add_argument("--n-samples", type=int, default=0)
    r.add_argument("--jobs", type=int, default=0)
    r.add_argument("--config-priority", action="store_true",
                   help="plan file wins over command line flags")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("curves", help="merge summary CSVs into tidy long format")
    c.add_argument("summaries", nargs="+")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_curves)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
