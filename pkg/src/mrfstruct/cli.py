"""Command-line surface: sample, reconstruct, verify, experiment, bounds, hidden.

Exit codes: 0 success, 1 input error, 2 resource cap exceeded,
3 reconstruction failure (per-vertex failure or ambiguity).

All randomness flows from --seed (or the config seed) through derived
streams, so outputs are byte-identical across runs; the experiment report is
the one exception, since it contains measured wall-clock columns.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
import time

import numpy as np

from . import seeds
from .errors import MRFError, ModelFormatError, StateSpaceError
from .estimator import Estimator
from .model import (Model, cube_graph, cycle_graph, ising_on_graph, load_model,
                    model_from_dict, model_to_dict, path_graph,
                    random_bounded_graph, xor_triple)
from .oracle import (correlation_distance, joint_distribution, marginalize,
                     robust_ctp_thresholds, verify_ctp_conditions,
                     verify_general_conditions, verify_hidden_conditions)
from .reconstruct import (ReconConfig, error_lower_bound, graph_count_lower_bound,
                          reconstruct_ctp, reconstruct_decay, reconstruct_general,
                          reconstruct_with_hidden, required_samples_ctp,
                          required_samples_general)
from .sampler import (NoiseChannel, apply_noise, channel_compose_exact,
                      gibbs_sample, load_samples_csv, sample_exact,
                      save_samples_csv)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CAP = 2
EXIT_RECON = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 means "resource cap" here
    def error(self, message):
        raise _UsageError(message)


def _dump_json(doc, out_path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threshold(value: str) -> float | str:
    if value == "auto":
        return "auto"
    return float(value)


def _int_list(value: str) -> list[int]:
    return [int(x) for x in value.split(",") if x != ""]


def _write_edges_csv(graph, path) -> None:
    with open(path, "w") as fh:
        fh.write("u,v\n")
        for u, v in graph.edge_list():
            fh.write(f"{u},{v}\n")


# ---------------------------------------------------------------------------
# sample

def _cmd_sample(args) -> int:
    model = load_model(args.model)
    if args.mode == "exact":
        dist = joint_distribution(model)
        samples = sample_exact(dist, args.k, args.seed)
    else:
        samples = gibbs_sample(model, args.k, burn_in=args.burn_in,
                               thinning=args.thinning, seed=args.seed,
                               chains=args.chains)
    if args.noise_q is not None:
        sites = tuple(_int_list(args.noise_sites)) if args.noise_sites else None
        samples = apply_noise(samples, NoiseChannel(args.noise_q, sites), args.seed)
    save_samples_csv(samples, args.out)
    print(f"wrote {samples.k} samples over {samples.n} sites to {args.out}",
          file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct

def _resolve_thresholds(args, model: Model | None, algo: str) -> ReconConfig:
    eps, delta = args.epsilon, args.delta
    if eps == "auto" or delta == "auto":
        if model is None:
            raise _UsageError("--epsilon/--delta auto need --model")
        verify = verify_ctp_conditions if algo == "ctp" else verify_general_conditions
        report = verify(model, args.d)
        if not report.holds:
            raise MRFError("cannot auto-threshold: measured conditions do not hold")
        if eps == "auto":
            eps = report.epsilon_star
        if delta == "auto":
            delta = report.delta_star
    kappa = args.kappa
    if kappa == "auto":
        if model is None:
            raise _UsageError("--kappa auto needs --model")
        dist = joint_distribution(model)
        edge_corrs = [correlation_distance(dist, u, v) for u, v in model.graph.edge_list()]
        if not edge_corrs:
            raise MRFError("cannot auto-threshold kappa: model has no edges")
        kappa = min(edge_corrs)
    return ReconConfig(d=args.d, epsilon=float(eps), delta=float(delta),
                       kappa=None if kappa is None else float(kappa), c1=args.c1)


def _cmd_reconstruct(args) -> int:
    if (args.samples is None) == (args.model is None):
        raise _UsageError("give exactly one of --samples or --model")
    model = load_model(args.model) if args.model else None
    algo = args.algo or ("decay" if args.kappa is not None else "general")
    cfg = _resolve_thresholds(args, model, algo)
    if args.samples:
        est = Estimator.from_samples(load_samples_csv(args.samples))
    else:
        est = Estimator.from_dist(joint_distribution(model))
    if algo == "ctp":
        result = reconstruct_ctp(est, cfg)
    elif algo == "general":
        result = reconstruct_general(est, cfg)
    else:
        if cfg.kappa is None:
            raise _UsageError("--algo decay needs --kappa")
        result = reconstruct_decay(est, cfg)
    _dump_json(result.to_dict(), args.out)
    if args.edges_out:
        _write_edges_csv(result.graph, args.edges_out)
    n_bad = sum(1 for p in result.per_vertex.values() if p.failed or p.ambiguous)
    if n_bad:
        print(f"reconstruction incomplete: {n_bad} vertices failed or ambiguous",
              file=sys.stderr)
        return EXIT_RECON
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _cmd_verify(args) -> int:
    model = load_model(args.model)
    if args.condition == "ctp":
        report = verify_ctp_conditions(model, args.d)
    elif args.condition == "general":
        report = verify_general_conditions(model, args.d)
    else:
        report = verify_hidden_conditions(model, args.d)
    _dump_json(report.to_dict(), args.out)
    print(f"condition={args.condition} holds={report.holds} "
          f"epsilon_star={report.epsilon_star:.6g} delta_star={report.delta_star:.6g} "
          f"constraints={report.constraint_count}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds

def _cmd_bounds(args) -> int:
    cfg = ReconConfig(d=args.d, epsilon=args.epsilon, delta=args.delta, c1=args.c1)
    ctp = required_samples_ctp(cfg, args.n, args.A)
    gen = required_samples_general(cfg, args.n, args.A)
    count = graph_count_lower_bound(args.n, args.d)
    err = error_lower_bound(args.n, args.d, args.A, args.k)
    doc = {
        "n": args.n, "d": args.d, "A": args.A,
        "epsilon": args.epsilon, "delta": args.delta, "c1": args.c1, "k": args.k,
        "required_samples_ctp": ctp.k, "failure_bound_ctp": ctp.failure_bound,
        "required_samples_general": gen.k, "failure_bound_general": gen.failure_bound,
        "graph_count_log_lower_bound": count.log_count,
        "count_formula_valid": count.formula_valid,
        "error_lower_bound": err,
    }
    print(f"k_ctp={ctp.k} k_general={gen.k} "
          f"log_count>={count.log_count:.6g} (valid={count.formula_valid}) "
          f"error>={err:.6g} at k={args.k}")
    if args.out:
        _dump_json(doc, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# hidden

def _cmd_hidden(args) -> int:
    if (args.samples is None) == (args.model is None):
        raise _UsageError("give exactly one of --samples or --model")
    eps, delta = args.epsilon, args.delta
    if args.model:
        model = load_model(args.model)
        hide = _int_list(args.hide) if args.hide else []
        observed = [v for v in range(model.n) if v not in set(hide)]
        dist = marginalize(joint_distribution(model), observed)
        est = Estimator.from_dist(dist)
        if eps == "auto" or delta == "auto":
            rep_h = verify_hidden_conditions(model, args.dprime)
            rep_g = verify_general_conditions(model, 2 * args.dprime)
            if not (rep_h.holds and rep_g.holds):
                raise MRFError("cannot auto-threshold: hidden-recovery conditions do not hold")
            if eps == "auto":
                eps = min(rep_h.epsilon_star, rep_g.epsilon_star)
            if delta == "auto":
                delta = min(rep_h.delta_star, rep_g.delta_star)
    else:
        if eps == "auto" or delta == "auto":
            raise _UsageError("--epsilon/--delta auto need --model")
        est = Estimator.from_samples(load_samples_csv(args.samples))
    cfg = ReconConfig(d=2 * args.dprime, epsilon=float(eps), delta=float(delta),
                      c1=args.c1)
    graph = reconstruct_with_hidden(est, args.dprime, cfg)
    _dump_json({"n": graph.n, "observed": est.n,
                "edges": [list(e) for e in graph.edge_list()]}, args.out)
    if args.edges_out:
        _write_edges_csv(graph, args.edges_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment

def _build_model(spec) -> Model:
    if isinstance(spec, str):
        return load_model(spec)
    if not isinstance(spec, dict):
        raise ModelFormatError(f"bad model spec: {spec!r}")
    if "n" in spec and "potentials" in spec:
        return model_from_dict(spec)
    builder = spec.get("builder", "ising")
    if builder == "xor":
        return xor_triple(float(spec.get("strength", 1.0)))
    if builder != "ising":
        raise ModelFormatError(f"unknown model builder {builder!r}")
    gspec = spec["graph"]
    gtype = gspec["type"]
    if gtype == "path":
        graph = path_graph(int(gspec["n"]))
    elif gtype == "cycle":
        graph = cycle_graph(int(gspec["n"]))
    elif gtype == "cube":
        graph = cube_graph()
    elif gtype == "random":
        graph = random_bounded_graph(int(gspec["n"]), int(gspec["d"]),
                                     int(gspec.get("seed", 0)))
    else:
        raise ModelFormatError(f"unknown graph type {gtype!r}")
    beta = spec.get("beta", 1.0)
    if isinstance(beta, dict):
        rng = seeds.derived_rng(int(beta.get("seed", 0)), seeds.BATTERY)
        couplings = {}
        for e in graph.edge_list():
            b = float(rng.uniform(float(beta["low"]), float(beta["high"])))
            if beta.get("random_sign") and rng.random() < 0.5:
                b = -b
            couplings[e] = b
        return ising_on_graph(graph, couplings)
    return ising_on_graph(graph, float(beta))


def _edge_metrics(true_edges: frozenset, got_edges: frozenset) -> tuple[bool, float, float]:
    hit = len(true_edges & got_edges)
    precision = hit / len(got_edges) if got_edges else 1.0
    recall = hit / len(true_edges) if true_edges else 1.0
    return got_edges == true_edges, precision, recall


def _run_cell(payload: dict) -> dict:
    """One (k, trial) grid cell; top-level so process pools can run it."""
    model = model_from_dict(payload["model"])
    cfg = ReconConfig(**payload["cfg"])
    k, trial = payload["k"], payload["trial"]
    cell = {"k": k, "trial": trial}
    t0 = time.perf_counter()
    try:
        if payload["mode"] == "exact":
            est = Estimator.from_dist(joint_distribution(model))
        else:
            cell_seed = seeds.derived_seed(payload["seed"], seeds.EXPERIMENT,
                                           payload["k_index"], trial)
            if payload["sampler"] == "gibbs":
                samples = gibbs_sample(model, k, burn_in=payload["burn_in"],
                                       thinning=payload["thinning"], seed=cell_seed)
            else:
                samples = sample_exact(joint_distribution(model), k, cell_seed)
            noise = payload.get("noise")
            if noise:
                channel = NoiseChannel(noise["flip_prob"],
                                       tuple(noise["sites"]) if noise.get("sites") else None)
                samples = apply_noise(samples, channel, cell_seed)
            est = Estimator.from_samples(samples)
        algo = payload["algorithm"]
        if algo == "ctp":
            result = reconstruct_ctp(est, cfg)
        elif algo == "general":
            result = reconstruct_general(est, cfg)
        else:
            result = reconstruct_decay(est, cfg)
        ok, precision, recall = _edge_metrics(model.graph.edges, result.graph.edges)
        cell.update(success=bool(ok and result.ok), precision=precision, recall=recall)
    except MRFError as exc:
        cell.update(success=False, precision=0.0, recall=0.0, error=str(exc))
    cell["runtime_ms"] = (time.perf_counter() - t0) * 1000.0
    return cell


def _load_experiment_config(path, args) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("experiment config must be a JSON object")
    # command-line overrides for the grid knobs
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.k is not None:
        doc.setdefault("estimator", {})["k"] = _int_list(args.k)
    if args.noise_q is not None:
        doc["noise"] = ({} if not doc.get("noise") else dict(doc["noise"]))
        doc["noise"]["flip_prob"] = args.noise_q
    for key in ("model", "estimator", "algorithm", "thresholds", "out"):
        if key not in doc:
            raise ModelFormatError(f"experiment config missing {key!r}")
    if doc["algorithm"] not in ("ctp", "general", "decay"):
        raise ModelFormatError(f"unknown algorithm {doc['algorithm']!r}")
    est = doc["estimator"]
    if est.get("mode") not in ("exact", "sampled"):
        raise ModelFormatError("estimator.mode must be 'exact' or 'sampled'")
    if est["mode"] == "sampled" and not est.get("k"):
        raise ModelFormatError("sampled mode needs a non-empty k list")
    if int(doc.get("trials", 1)) < 1:
        raise ModelFormatError("trials must be >= 1")
    if doc.get("noise") and est["mode"] == "exact":
        raise ModelFormatError("noise requires sampled mode")
    return doc


def _cmd_experiment(args) -> int:
    doc = _load_experiment_config(args.config, args)
    model = _build_model(doc["model"])
    th = doc["thresholds"]
    algo = doc["algorithm"]
    seed = int(doc.get("seed", 0))
    trials = int(doc.get("trials", 1))

    measured = None
    needs_auto = th.get("epsilon") == "auto" or th.get("delta") == "auto" \
        or th.get("kappa") == "auto"
    noise = doc.get("noise")
    dist = None
    try:
        dist = joint_distribution(model)
    except StateSpaceError:
        if needs_auto:
            raise
    auto_eps = auto_delta = None
    if dist is not None:
        if noise:
            # auto thresholds must describe the observed (noisy) law; only
            # the two-point test has a residual-based auto rule
            if needs_auto:
                if algo != "ctp":
                    raise MRFError(
                        "auto thresholds under noise are supported for ctp only")
                channel = NoiseChannel(noise["flip_prob"],
                                       tuple(noise["sites"]) if noise.get("sites") else None)
                observed = channel_compose_exact(dist, channel)
                auto_eps, auto_delta, report, residual = robust_ctp_thresholds(
                    observed, model.graph, int(th["d"]))
                measured = {"holds": report.holds, "epsilon_star": report.epsilon_star,
                            "delta_star": report.delta_star,
                            "acceptance_residual": residual}
        else:
            verify = verify_ctp_conditions if algo == "ctp" else verify_general_conditions
            report = verify(model, int(th["d"]))
            measured = {"holds": report.holds,
                        "epsilon_star": report.epsilon_star if math.isfinite(report.epsilon_star) else "inf",
                        "delta_star": report.delta_star if math.isfinite(report.delta_star) else "inf"}
            if needs_auto and not report.holds:
                raise MRFError("cannot auto-threshold: measured conditions do not hold")
            auto_eps, auto_delta = report.epsilon_star, report.delta_star
    eps = auto_eps if th.get("epsilon") == "auto" else float(th["epsilon"])
    delta = auto_delta if th.get("delta") == "auto" else float(th["delta"])
    kappa = th.get("kappa")
    if kappa == "auto":
        kappa = min(correlation_distance(dist, u, v) for u, v in model.graph.edge_list())
    cfg = ReconConfig(d=int(th["d"]), epsilon=eps, delta=delta,
                      kappa=None if kappa is None else float(kappa),
                      c1=float(th.get("c1", 1.0)))

    est_spec = doc["estimator"]
    if est_spec["mode"] == "exact":
        klist = [0]
    else:
        klist = [int(k) for k in est_spec["k"]]
    model_doc = model_to_dict(model)
    payloads = []
    cfg_doc = {"d": cfg.d, "epsilon": cfg.epsilon, "delta": cfg.delta,
               "kappa": cfg.kappa, "c1": cfg.c1}
    for ki, k in enumerate(klist):
        for trial in range(trials):
            payloads.append({
                "model": model_doc, "cfg": cfg_doc,
                "k": k, "k_index": ki, "trial": trial, "seed": seed,
                "mode": est_spec["mode"],
                "sampler": est_spec.get("sampler", "exact"),
                "burn_in": int(est_spec.get("burn_in", 1000)),
                "thinning": int(est_spec.get("thinning", 10)),
                "algorithm": algo, "noise": doc.get("noise"),
            })

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            cells = list(pool.map(_run_cell, payloads))
    else:
        cells = [_run_cell(p) for p in payloads]
    cells.sort(key=lambda c: (c["k"], c["trial"]))

    aggregates = []
    for k in klist:
        group = [c for c in cells if c["k"] == k]
        aggregates.append({
            "k": k,
            "success_rate": float(np.mean([c["success"] for c in group])),
            "mean_precision": float(np.mean([c["precision"] for c in group])),
            "mean_recall": float(np.mean([c["recall"] for c in group])),
            "mean_runtime_ms": float(np.mean([c["runtime_ms"] for c in group])),
        })

    out_prefix = args.out or doc["out"]
    report_doc = {"config": doc, "measured": measured, "cells": cells,
                  "aggregates": aggregates}
    _dump_json(report_doc, f"{out_prefix}.json")
    with open(f"{out_prefix}.csv", "w") as fh:
        fh.write("k,success_rate,mean_precision,mean_recall,mean_runtime_ms\n")
        for agg in aggregates:
            fh.write(f"{agg['k']},{agg['success_rate']},{agg['mean_precision']},"
                     f"{agg['mean_recall']},{agg['mean_runtime_ms']}\n")
    for agg in aggregates:
        print(f"k={agg['k']}: success_rate={agg['success_rate']:.3f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    top = _Parser(prog="mrfstruct",
                  description="Structure learning for bounded-degree Markov random fields")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw samples from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=["exact", "gibbs"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--noise-q", type=float, default=None)
    p.add_argument("--noise-sites", default=None, help="comma list; default all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("reconstruct", help="reconstruct a graph from samples or a model")
    p.add_argument("--samples")
    p.add_argument("--model")
    p.add_argument("--algo", choices=["ctp", "general", "decay"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=_threshold, required=True, help="float or 'auto'")
    p.add_argument("--delta", type=_threshold, required=True, help="float or 'auto'")
    p.add_argument("--kappa", type=_threshold, default=None)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--edges-out", default=None, help="also write the edges as CSV")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("verify", help="measure non-degeneracy conditions on a model")
    p.add_argument("--model", required=True)
    p.add_argument("--d", type=int, required=True,
                   help="degree bound (for hidden: the hidden-degree bound)")
    p.add_argument("--condition", choices=["ctp", "general", "hidden"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("experiment", help="run a (k x trials) reconstruction grid")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int, default=None, help="override config trials")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--k", default=None, help="override config k list (comma separated)")
    p.add_argument("--noise-q", type=float, default=None,
                   help="override config noise flip probability")
    p.add_argument("--out", default=None, help="output prefix override")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bounds", help="sample-size and error-bound calculators")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--A", type=int, default=2)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("hidden", help="reconstruct with hidden-vertex recovery")
    p.add_argument("--samples", help="CSV restricted to observed vertices")
    p.add_argument("--model", help="full model file (oracle mode)")
    p.add_argument("--hide", default=None, help="comma list of hidden vertices")
    p.add_argument("--dprime", type=int, required=True)
    p.add_argument("--epsilon", type=_threshold, required=True)
    p.add_argument("--delta", type=_threshold, required=True)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--edges-out", default=None, help="also write the edges as CSV")
    p.set_defaults(func=_cmd_hidden)

    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StateSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MRFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RECON


if __name__ == "__main__":
    sys.exit(main())
