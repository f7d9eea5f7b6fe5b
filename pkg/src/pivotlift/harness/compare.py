"""Learning-curve comparison between two groups of training runs.

Each run contributes its training CSV. Within a group, runs must share
an identical iteration grid; curves are then averaged per iteration and
a final-window score (mean task reward over the last hundred logged
iterations, fewer if the run is shorter) summarizes each run.
"""

from __future__ import annotations

import io
import os

import numpy as np

from ..errors import ConfigError, ParseError

TRAIN_MAGIC = "# pivotlift-train v1"

FINAL_WINDOW = 100


def read_train_csv(path):
    """Parse one training log into (meta, columns-of-float-arrays)."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ConfigError(f"{path}: {e}")
    if not lines or lines[0] != TRAIN_MAGIC:
        raise ParseError(f"{path}:1: expected '{TRAIN_MAGIC}'")
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, sep, value = lines[i][1:].partition(":")
        if sep:
            meta[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ParseError(f"{path}:{len(lines)}: missing column header")
    names = lines[i].split(",")
    rows = []
    for j in range(i + 1, len(lines)):
        if not lines[j]:
            continue
        cells = lines[j].split(",")
        if len(cells) != len(names):
            raise ParseError(
                f"{path}:{j + 1}: expected {len(names)} fields, "
                f"got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{path}:{j + 1}: non-numeric value")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    data = np.array(rows)
    return meta, {name: data[:, k] for k, name in enumerate(names)}


def _load_group(label, csv_paths):
    runs = []
    for p in csv_paths:
        meta, cols = read_train_csv(p)
        if "iteration" not in cols or "ep_task_reward_mean" not in cols:
            raise ParseError(f"{p}: missing required columns")
        runs.append((p, meta, cols))
    grid = runs[0][2]["iteration"]
    for p, _, cols in runs[1:]:
        if not np.array_equal(cols["iteration"], grid):
            raise ConfigError(
                f"iteration grids differ within group {label!r}: "
                f"{runs[0][0]} has {len(grid)} rows ending at "
                f"{int(grid[-1])}, {p} has {len(cols['iteration'])} rows "
                f"ending at {int(cols['iteration'][-1])}")
    return grid, runs


def _final_scores(runs):
    out = []
    for _, _, cols in runs:
        r = cols["ep_task_reward_mean"]
        out.append(float(np.mean(r[-min(FINAL_WINDOW, len(r)):])))
    return np.array(out)


def compare_runs(group_a, group_b, labels=("a", "b")):
    """Compare two groups of training CSVs.

    Returns a dict with per-iteration group means/stds and the
    final-window scores per run. Groups may use different iteration
    grids than each other (say, one stopped early): the per-iteration
    table covers the common prefix, which must agree exactly.
    """
    grid_a, runs_a = _load_group(labels[0], group_a)
    grid_b, runs_b = _load_group(labels[1], group_b)
    m = min(len(grid_a), len(grid_b))
    if not np.array_equal(grid_a[:m], grid_b[:m]):
        raise ConfigError(
            f"iteration grids of groups {labels[0]!r} and {labels[1]!r} "
            "do not share a common prefix; these runs logged on "
            "different schedules and cannot be aligned")

    def stack(runs, upto):
        return np.stack([c["ep_task_reward_mean"][:upto]
                         for _, _, c in runs])

    curves_a = stack(runs_a, m)
    curves_b = stack(runs_b, m)
    return {
        "labels": labels,
        "iteration": grid_a[:m].astype(int),
        "mean_a": curves_a.mean(axis=0),
        "std_a": curves_a.std(axis=0),
        "mean_b": curves_b.mean(axis=0),
        "std_b": curves_b.std(axis=0),
        "runs_a": [p for p, _, _ in runs_a],
        "runs_b": [p for p, _, _ in runs_b],
        "final_a": _final_scores(runs_a),
        "final_b": _final_scores(runs_b),
    }


def format_comparison(result):
    """Human summary of a comparison, one line per group plus verdict."""
    la, lb = result["labels"]
    fa, fb = result["final_a"], result["final_b"]
    lines = [
        f"{la}: {len(fa)} run(s), final-window task reward "
        f"{fa.mean():.4f} +/- {fa.std():.4f}",
        f"{lb}: {len(fb)} run(s), final-window task reward "
        f"{fb.mean():.4f} +/- {fb.std():.4f}",
    ]
    diff = fa.mean() - fb.mean()
    lines.append(f"difference ({la} - {lb}): {diff:+.4f}")
    return "\n".join(lines)


def write_comparison_csv(result, path):
    la, lb = result["labels"]
    buf = io.StringIO()
    buf.write("# pivotlift-compare v1\n")
    for tag, key in ((la, "runs_a"), (lb, "runs_b")):
        for p in result[key]:
            buf.write(f"# run[{tag}]: {os.path.basename(p)}\n")
    buf.write(f"# final_window: {FINAL_WINDOW}\n")
    fa, fb = result["final_a"], result["final_b"]
    buf.write(f"# final[{la}]: mean {fa.mean()!r} std {fa.std()!r}\n")
    buf.write(f"# final[{lb}]: mean {fb.mean()!r} std {fb.std()!r}\n")
    buf.write(f"iteration,mean_{la},std_{la},mean_{lb},std_{lb}\n")
    for i in range(len(result["iteration"])):
        buf.write(",".join([
            str(int(result["iteration"][i])),
            repr(float(result["mean_a"][i])),
            repr(float(result["std_a"][i])),
            repr(float(result["mean_b"][i])),
            repr(float(result["std_b"][i])),
        ]) + "\n")
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
