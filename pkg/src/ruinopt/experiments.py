"""The optimize / compare / diagnose experiments and their file outputs."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import RuinEvaluator, adjustment_coefficient_b_star
from .diagnostics import run_diagnostics
from .errors import UnsupportedModelError
from .kernels import BACKEND
from .model import Strategy
from .optimizer import RunTrace, run_spg
from .streams import derive_seeds

FULL_P_LIMIT = 20
COMPARE_COLUMNS = ["run_id", "seed", "b_final", "ruin_terminal", "ruin_terminal_se", "ruin_path", "ruin_path_se"]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def trace_header(m: int, top_k: int = 5) -> list:
    head = ["k", "gamma_k", "m_k", "b"]
    if m <= FULL_P_LIMIT:
        head += [f"p_{j}" for j in range(m)]
    else:
        for i in range(1, top_k + 1):
            head += [f"top{i}_index", f"top{i}_p"]
    return head + ["ruin_hat", "ruin_se", "min_ruin_hat", "gradmap_norm"]


def _weight_cells(p, m, top_k):
    if m <= FULL_P_LIMIT:
        return [fmt(v) for v in p]
    order = np.argsort(-p, kind="stable")[:top_k]
    cells = []
    for j in order:
        cells += [str(int(j)), fmt(p[j])]
    return cells


def write_trace_csv(trace: RunTrace, path, m: int, top_k: int = 5) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(m, top_k))
        for rec in trace.records:
            x = rec.strategy
            w.writerow([str(rec.k), fmt(rec.gamma), str(rec.batch_size), fmt(x.b)]
                       + _weight_cells(x.p, m, top_k)
                       + [fmt(rec.ruin_hat), fmt(rec.ruin_se), fmt(rec.min_ruin_hat), fmt(rec.gradmap_norm)])


def write_full_weights_csv(trace: RunTrace, path) -> None:
    """Full weight vectors at the first and last iterate (large-m runs)."""
    m = trace[0].strategy.p.size
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"p_{j}" for j in range(m)])
        for rec in (trace[0], trace[-1]):
            w.writerow([str(rec.k)] + [fmt(v) for v in rec.strategy.p])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, default=_json_default, allow_nan=True)
        fh.write("\n")


def _strategy_dict(x: Strategy) -> dict:
    return {"p": x.p.tolist(), "b": x.b}


def run_optimize(cfg, out_dir, log=print) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    model = cfg.build_model()
    region = cfg.build_region(model)
    x0 = Strategy.uniform(model.m, cfg.spg.initial_b)
    trace = run_spg(model, region, cfg.spg_config(), cfg.weight_function(), x0=x0)
    write_trace_csv(trace, out / "trace.csv", model.m, cfg.run.top_k)
    if model.m > FULL_P_LIMIT:
        write_full_weights_csv(trace, out / "weights_full.csv")
    summary = {
        "command": "optimize",
        "backend": BACKEND,
        "final_strategy": _strategy_dict(trace.final),
        "best_strategy": _strategy_dict(trace.best_strategy()),
        "ruin_hat_initial": trace[0].ruin_hat,
        "min_ruin_hat": trace.min_ruin,
        "iterations": len(trace) - 1,
        "master_seed": cfg.run.master_seed,
        "asset_seed": getattr(cfg.assets, "seed", None),
        "config": cfg.to_dict(),
        "wall_time_s": time.perf_counter() - started,
    }
    write_json(summary, out / "summary.json")
    log(f"optimize: min ruin {trace.min_ruin:.5f} (start {trace[0].ruin_hat:.5f}), "
        f"final b={trace.final.b:.6f}; wrote {out / 'trace.csv'}")
    return summary


def _quartiles(values) -> dict:
    q1, med, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return {"q1": float(q1), "median": float(med), "q3": float(q3)}


def run_compare(cfg, out_dir, log=print) -> dict:
    """Repeated SPG runs on a cash-only model versus the adjustment-coefficient retention."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    model = cfg.build_model()
    if model.has_risky_assets:
        raise UnsupportedModelError("compare needs a reinsurance-only model (cash assets only)")
    region = cfg.build_region(model)
    wf = cfg.weight_function()
    x0 = Strategy.uniform(model.m, cfg.spg.initial_b)
    seeds = derive_seeds(cfg.run.master_seed, cfg.run.repetitions)

    def one(seed):
        spg = cfg.spg_config(seed=seed, eval_batch=0, workers=1)
        return run_spg(model, region, spg, wf, x0=x0).final.b

    if cfg.run.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.run.workers) as pool:
            finals = list(pool.map(one, seeds))
    else:
        finals = [one(s) for s in seeds]

    n_eval = cfg.spg.eval_batch if cfg.spg.eval_batch > 0 else 10_000
    evaluator = RuinEvaluator(model, n_eval, cfg.run.master_seed, "compare-evaluation",
                              workers=cfg.run.workers, keep_paths=True)
    b_star = adjustment_coefficient_b_star(model.claim.shape, model.theta, model.zeta)
    b_star_eval = min(max(b_star, region.b_min), 1.0)
    p = x0.p

    rows = []
    for run_id, (seed, b) in enumerate(zip(seeds, finals)):
        term, path = evaluator.terminal(p, b), evaluator.path(b)
        rows.append([str(run_id), str(seed), fmt(b), fmt(term.probability), fmt(term.std_error),
                     fmt(path.probability), fmt(path.std_error)])
    term_star, path_star = evaluator.terminal(p, b_star_eval), evaluator.path(b_star_eval)
    rows.append(["adjustment_coefficient", "", fmt(b_star_eval), fmt(term_star.probability),
                 fmt(term_star.std_error), fmt(path_star.probability), fmt(path_star.std_error)])
    with open(out / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_COLUMNS)
        w.writerows(rows)

    terminal = [float(r[3]) for r in rows[:-1]]
    paths = [float(r[5]) for r in rows[:-1]]
    summary = {
        "command": "compare",
        "backend": BACKEND,
        "repetitions": cfg.run.repetitions,
        "b_final": _quartiles(finals),
        "ruin_terminal": _quartiles(terminal),
        "ruin_path": _quartiles(paths),
        "b_star": b_star,
        "b_star_terminal": {"probability": term_star.probability, "std_error": term_star.std_error},
        "b_star_path": {"probability": path_star.probability, "std_error": path_star.std_error},
        "eval_samples": n_eval,
        "master_seed": cfg.run.master_seed,
        "config": cfg.to_dict(),
        "wall_time_s": time.perf_counter() - started,
    }
    write_json(summary, out / "compare_summary.json")
    log(f"compare: median terminal ruin {summary['ruin_terminal']['median']:.5f} vs "
        f"{term_star.probability:.5f} at b*={b_star:.6f}; wrote {out / 'compare.csv'}")
    return summary


def run_diagnose(cfg, out_dir, log=print, derivative_sign=1.0):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_diagnostics(cfg, derivative_sign=derivative_sign, progress=lambda r: log(r.line()))
    write_json({
        "command": "diagnose",
        "backend": BACKEND,
        "checks": [{"name": r.name, "passed": r.passed, "margin": r.margin, "stats": r.stats} for r in results],
        "config": cfg.to_dict(),
    }, out / "diagnose.json")
    return results

