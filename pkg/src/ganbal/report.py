"""Plots, summaries and run comparisons built from metrics.csv files."""
import json
import logging
import os
import statistics

from .plots import allocation_chart, line_chart
from .train import read_metrics

log = logging.getLogger(__name__)

SETTLED_FROM = 5  # epochs before this are warm-up for the |delta rps| statistic


def _run_config(run_dir):
    p = os.path.join(run_dir, "config.json")
    if not os.path.exists(p):
        return {}
    with open(p) as f:
        return json.load(f)


def load_rows(run_dir):
    path = os.path.join(run_dir, "metrics.csv")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no metrics.csv in {run_dir}")
    rows = [r for r in read_metrics(path) if r.get("status") != "aborted"]
    if not rows:
        raise ValueError(f"{path} has no completed epochs")
    return rows


def mean_abs_delta(rows, start=SETTLED_FROM):
    vals = [abs(r["delta"]) for r in rows if r["epoch"] >= start and r.get("delta") is not None]
    return statistics.fmean(vals) if vals else None


def summarize(rows, epsilon):
    fids = [(r["epoch"], r["fid"]) for r in rows if r.get("fid") is not None]
    s = {"epochs": len(rows),
         "final_fid": fids[-1][1] if fids else None,
         "best_fid": min(f for _, f in fids) if fids else None,
         "best_fid_epoch": min(fids, key=lambda t: t[1])[0] if fids else None,
         "mean_abs_delta": mean_abs_delta(rows, 1),
         "mean_abs_delta_settled": mean_abs_delta(rows),
         "trigger_epochs": [r["epoch"] for r in rows
                            if r.get("delta") is not None and abs(r["delta"]) > epsilon],
         "extra_batches_total": sum(r["extra_batches"] or 0 for r in rows)}
    return s


def report(run_dir):
    """Write plots/*.svg and summary.txt for a run; returns the summary text."""
    rows = load_rows(run_dir)
    cfg = _run_config(run_dir)
    eps = cfg.get("scheduler", {}).get("epsilon", 0.05)
    plot_dir = os.path.join(run_dir, "plots")
    os.makedirs(plot_dir, exist_ok=True)
    ep = [r["epoch"] for r in rows]
    charts = {
        "loss_d.svg": line_chart({"loss_d": (ep, [r["loss_d"] for r in rows])},
                                 "Discriminator loss", ylabel="loss"),
        "loss_g.svg": line_chart({"loss_g": (ep, [r["loss_g"] for r in rows]),
                                  "adversarial": (ep, [r["loss_g_adv"] for r in rows])},
                                 "Generator loss", ylabel="loss"),
    }
    fid_rows = [r for r in rows if r.get("fid") is not None]
    if fid_rows:
        charts["fid.svg"] = line_chart({"fid": ([r["epoch"] for r in fid_rows],
                                                [r["fid"] for r in fid_rows])},
                                       "Proxy FID", ylabel="FID")
    rps_rows = [r for r in rows if r.get("rps_g") is not None]
    if rps_rows:
        e2 = [r["epoch"] for r in rps_rows]
        charts["rps.svg"] = line_chart({"rps_g": (e2, [r["rps_g"] for r in rps_rows]),
                                        "rps_d": (e2, [r["rps_d"] for r in rps_rows])},
                                       "Relative performance scores", ylabel="score")
    signed = [(r["extra_batches"] or 0) * (1 if r["target"] == "generator" else -1) for r in rows]
    charts["allocation.svg"] = allocation_chart(ep, signed)
    for name, svg in charts.items():
        with open(os.path.join(plot_dir, name), "w") as f:
            f.write(svg)

    s = summarize(rows, eps)
    lines = [f"run: {run_dir}", f"mode: {cfg.get('mode', '?')}", f"epochs: {s['epochs']}"]
    if fid_rows:
        lines.append(f"final FID: {s['final_fid']:.6g}")
        lines.append(f"best FID: {s['best_fid']:.6g} (epoch {s['best_fid_epoch']})")
    else:
        lines.append("FID: no evaluations recorded, FID chart omitted")
    if s["mean_abs_delta"] is not None:
        lines.append(f"mean |rps_g - rps_d|: {s['mean_abs_delta']:.6g}")
        if s["mean_abs_delta_settled"] is not None:
            lines.append(f"mean |rps_g - rps_d| (epoch >= {SETTLED_FROM}): "
                         f"{s['mean_abs_delta_settled']:.6g}")
    trig = s["trigger_epochs"]
    lines.append(f"epochs with |delta rps| > {eps}: " + (", ".join(map(str, trig)) if trig else "none"))
    lines.append(f"extra batches scheduled: {s['extra_batches_total']}")
    lines.append("plots: " + ", ".join(sorted(charts)))
    text = "\n".join(lines) + "\n"
    with open(os.path.join(run_dir, "summary.txt"), "w") as f:
        f.write(text)
    return text


def _median(vals):
    vals = [v for v in vals if v is not None]
    return statistics.median(vals) if vals else None


EVAL_KEYS = ("fid_seed", "fid_extractor", "eval_samples", "fid_every")


def compare(runs_a, runs_b, labels=("A", "B")):
    """Side-by-side metrics for two runs (or two groups of runs, reported as medians).

    Returns ``(table_text, result_dict)``.
    """
    groups = [[runs_a] if isinstance(runs_a, str) else list(runs_a),
              [runs_b] if isinstance(runs_b, str) else list(runs_b)]
    warnings = []
    cfgs = [_run_config(r) for g in groups for r in g]
    for key in EVAL_KEYS:
        vals = {json.dumps(c.get(key)) for c in cfgs}
        if len(vals) > 1:
            warnings.append(f"WARNING: runs differ in evaluation setting {key!r}: "
                            f"{', '.join(sorted(vals))}")
    metrics = {}
    for label, group in zip(labels, groups):
        per = []
        for r in group:
            cfg = _run_config(r)
            per.append(summarize(load_rows(r), cfg.get("scheduler", {}).get("epsilon", 0.05)))
        metrics[label] = {
            "final_fid": _median([p["final_fid"] for p in per]),
            "best_fid": _median([p["best_fid"] for p in per]),
            "mean_abs_delta": _median([p["mean_abs_delta"] for p in per]),
            "mean_abs_delta_settled": _median([p["mean_abs_delta_settled"] for p in per]),
            "trigger_epochs": _median([len(p["trigger_epochs"]) for p in per]),
            "runs": len(group),
        }
    a, b = (metrics[k] for k in labels)
    lower_better = ("final_fid", "best_fid", "mean_abs_delta", "mean_abs_delta_settled")
    header = f"{'metric':<26}{labels[0]:>14}{labels[1]:>14}{'delta':>14}  winner"
    lines = warnings + [header, "-" * len(header)]
    result = {"metrics": metrics, "warnings": warnings, "winner": {}}
    for key in lower_better + ("trigger_epochs",):
        va, vb = a[key], b[key]
        if va is None or vb is None:
            lines.append(f"{key:<26}{_cell(va)}{_cell(vb)}{'':>14}  -")
            continue
        d = vb - va
        win = "-"
        if key in lower_better and d != 0:
            win = labels[0] if va < vb else labels[1]
        result["winner"][key] = win
        lines.append(f"{key:<26}{_cell(va)}{_cell(vb)}{_cell(d)}  {win}")
    lines.append(f"{'runs':<26}{a['runs']:>14}{b['runs']:>14}")
    return "\n".join(lines) + "\n", result


def _cell(v):
    return f"{'n/a':>14}" if v is None else f"{v:>14.6g}"
