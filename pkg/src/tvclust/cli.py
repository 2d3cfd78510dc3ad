"""Command-line surface: data loading, the multi-trial protocol, result files.

Subcommands
-----------
cluster    unsupervised partition of a graph into R classes
transduce  partition with known labels pinned (from a file or sampled)
graph      build a k-NN similarity graph from a feature CSV
trace      emit per-iteration and per-cluster plot data from a run directory

A clustering run executes several trials, each a full solver run from its
own starting point, and keeps the trial whose rounded partition has the
lowest discrete energy. Trial t derives its randomness from seed + t, so
serial and parallel execution produce identical results. The first trial
uses a deterministic start when one is given (an init file, explicit seed
vertices, or the labeled sets); all remaining trials diffuse randomly
drawn seed vertices.

Run directories contain assignments.csv, summary.txt, solution.csv, and
records.csv. Set MTV_LOG=debug for per-step solver output on stderr.
"""

import argparse
import csv
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .balance import default_lambda, discrete_energy, DegenerateClusterError
from .graph import (build_knn_graph, gradient_operator, operator_norm,
                    largest_component_fraction, read_edge_list,
                    read_matrix_market, read_feature_csv, write_edge_list)
from .init import (load_init_from_file, pick_seeds, random_simplex_init,
                   seeded_propagation_init)
from .metrics import (assign_clusters, count_empty_classes, purity,
                      select_best_trial, sharpness)
from .projection import LabelConstraint, read_label_file
from .solver import IterationRecord, SolverConfig, run

log = logging.getLogger("mtv")

MAX_OUTER_DETERMINISTIC = 10000
MAX_OUTER_RANDOM = 2000

# primal-dual steps granted to one trial, the unit of work that makes
# trial energies comparable across initializations of different quality
BUDGET_DETERMINISTIC = 10000
BUDGET_RANDOM = 2000


# ---------------------------------------------------------------------------
# result files

def write_assignments(path, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_index", "class_index"])
        for i, c in enumerate(labels):
            w.writerow([i, int(c)])


def read_assignments(path):
    """Read class labels from CSV.

    Accepts the two-column "vertex_index,class_index" format this package
    writes, or a bare single column of class indices, with or without a
    header line.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                continue  # header
    if not rows:
        raise ValueError("%s: no data rows" % path)
    arr = np.asarray(rows)
    if arr.shape[1] == 1:
        return arr[:, 0].astype(np.int64)
    out = np.full(int(arr[:, 0].max()) + 1, -1, dtype=np.int64)
    out[arr[:, 0].astype(np.int64)] = arr[:, 1].astype(np.int64)
    if np.any(out < 0):
        raise ValueError("%s: missing vertex rows" % path)
    return out


def write_summary(path, info):
    with open(path, "w") as fh:
        for key, val in info.items():
            if isinstance(val, float):
                fh.write("%s=%.17g\n" % (key, val))
            else:
                fh.write("%s=%s\n" % (key, val))


def read_summary(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, val = line.split("=", 1)
                out[key] = val
    return out


def write_matrix_csv(path, F):
    np.savetxt(path, np.asarray(F), delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)


RECORD_FIELDS = ["outer_index", "inner_iterations", "total_energy",
                 "per_cluster_energy", "descent_lhs", "descent_rhs",
                 "wall_time", "descent_forced"]


def write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([r.outer_index, r.inner_iterations,
                        "%.17g" % r.total_energy,
                        ";".join("%.17g" % e for e in r.per_cluster_energy),
                        "%.17g" % r.descent_lhs, "%.17g" % r.descent_rhs,
                        "%.17g" % r.wall_time, int(r.descent_forced)])


def read_records_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_FIELDS:
            raise ValueError("%s: unexpected columns" % path)
        for row in reader:
            records.append(IterationRecord(
                outer_index=int(row[0]), inner_iterations=int(row[1]),
                total_energy=float(row[2]),
                per_cluster_energy=tuple(float(x) for x in row[3].split(";")),
                descent_lhs=float(row[4]), descent_rhs=float(row[5]),
                wall_time=float(row[6]), descent_forced=bool(int(row[7]))))
    return records


def write_profiles(out_dir, F):
    """One profile_r.csv per cluster: vertex index, value, sorted value."""
    F = np.asarray(F)
    paths = []
    for r in range(F.shape[1]):
        col = F[:, r]
        path = os.path.join(out_dir, "profile_%d.csv" % r)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex_index", "value", "sorted_value"])
            for i, (v, s) in enumerate(zip(col, np.sort(col))):
                w.writerow([i, "%.17g" % v, "%.17g" % s])
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# the multi-trial protocol

def _label_sets(labels, n_classes):
    """Labeled vertex sets per class; every class must have at least one."""
    sets = []
    for r in range(n_classes):
        members = np.flatnonzero(labels.labels == r)
        if members.size == 0:
            raise ValueError("class %d has no labeled vertices" % r)
        sets.append(members)
    return sets


def _sample_labels(truth, n_classes, fraction, rng):
    """Draw a reproducible label subset: ceil-rounded share of each class,
    never fewer than one vertex."""
    picked = np.full(len(truth), -1, dtype=np.int64)
    for r in range(n_classes):
        members = np.flatnonzero(truth == r)
        if members.size == 0:
            raise ValueError("ground truth has no vertices of class %d" % r)
        k = max(1, int(round(fraction * members.size)))
        chosen = rng.choice(members, size=min(k, members.size), replace=False)
        picked[chosen] = r
    return LabelConstraint(picked)


def _run_trial(task):
    """Execute one trial. Module-level so a process pool can dispatch it."""
    (trial, kind, payload, g, K, L, R, lam, seed, cfg_args, labels,
     label_fraction, truth) = task
    attempts = 1 if kind in ("file", "seeds", "labels") else 3
    last_err = None
    for attempt in range(attempts):
        rng = np.random.default_rng(seed + trial + 7919 * attempt)
        trial_labels = labels
        try:
            if kind == "file":
                F0 = payload
            elif kind == "seeds":
                F0 = seeded_propagation_init(g, payload)
            elif kind == "labels":
                F0 = seeded_propagation_init(g, _label_sets(labels, R))
            elif kind == "sampled-labels":
                trial_labels = _sample_labels(truth, R, label_fraction, rng)
                F0 = seeded_propagation_init(g, _label_sets(trial_labels, R))
            elif kind == "random-seeds":
                F0 = seeded_propagation_init(g, pick_seeds(g.n_vertices, R, rng))
            elif kind == "random-simplex":
                F0 = random_simplex_init(g.n_vertices, R, rng)
            else:
                raise ValueError("unknown trial kind %r" % kind)
            cfg = SolverConfig(**cfg_args)
            F, records = run(g, F0, cfg, lam, labels=trial_labels, K=K, L=L)
        except DegenerateClusterError as err:
            last_err = err
            log.warning("trial %d attempt %d degenerated: %s", trial,
                        attempt, err)
            continue
        hard = assign_clusters(F)
        n_empty = count_empty_classes(hard, R)
        energy = math.inf if n_empty else discrete_energy(g, hard, lam, R)
        return {"trial": trial, "kind": kind, "energy": energy,
                "n_empty": n_empty, "sharpness": sharpness(F), "F": F,
                "labels": hard, "records": records,
                "constraint": trial_labels}
    log.warning("trial %d gave no usable result: %s", trial, last_err)
    return {"trial": trial, "kind": kind, "energy": math.inf,
            "n_empty": R, "sharpness": 0.0, "F": None, "labels": None,
            "records": [], "constraint": labels}


def run_protocol(g, n_classes, lam=None, n_trials=31, seed=0,
                 init_matrix=None, seed_vertices=None, labels=None,
                 label_fraction=None, ground_truth=None, jobs=1,
                 epsilon=1e-3, outer_tol=1e-4, max_outer=None,
                 max_inner=1000, K=None, L=None):
    """Run the multi-trial protocol and select the best trial.

    Returns a dict with the selected assignment matrix and labels, the
    per-trial energies, and the solver records of the winning trial.
    """
    R = n_classes
    if lam is None:
        lam = default_lambda(R)
    if K is None:
        K = gradient_operator(g)
    if L is None:
        L = operator_norm(K)

    deterministic = None
    if init_matrix is not None:
        deterministic = ("file", np.asarray(init_matrix, dtype=float))
    elif seed_vertices is not None:
        deterministic = ("seeds", list(seed_vertices))
    elif labels is not None and label_fraction is None:
        deterministic = ("labels", None)

    def cfg_args(kind):
        if max_outer is not None:
            # an explicit cap takes over termination control entirely
            mo, steps = max_outer, None
        elif kind in ("file", "seeds", "labels"):
            mo, steps = MAX_OUTER_DETERMINISTIC, BUDGET_DETERMINISTIC
        else:
            mo, steps = MAX_OUTER_RANDOM, BUDGET_RANDOM
        return {"epsilon": epsilon, "outer_tol": outer_tol, "max_outer": mo,
                "max_inner_per_outer": max_inner, "random_seed": seed,
                "total_inner_budget": steps}

    kinds = []
    for t in range(n_trials):
        if t == 0 and deterministic is not None:
            kinds.append(deterministic)
        elif label_fraction is not None:
            kinds.append(("sampled-labels", None))
        else:
            kinds.append(("random-seeds", None))
    tasks = [(t, kind, payload, g, K, L, R, lam, seed, cfg_args(kind),
              labels, label_fraction, ground_truth)
             for t, (kind, payload) in enumerate(kinds)]

    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks))
    else:
        results = [_run_trial(task) for task in tasks]
    wall = time.perf_counter() - t0

    energies = [res["energy"] for res in results]
    empties = [res["n_empty"] for res in results]
    if all(res["F"] is None for res in results):
        raise RuntimeError("every trial failed; nothing to select")
    best = select_best_trial(energies, empties)
    if results[best]["F"] is None:
        best = next(i for i, res in enumerate(results) if res["F"] is not None)
    sel = results[best]
    log.info("selected trial %d of %d: discrete energy %.8g, sharpness %.6f",
             best, n_trials, sel["energy"], sel["sharpness"])
    return {"F": sel["F"], "labels": sel["labels"], "records": sel["records"],
            "selected_trial": best, "energies": energies, "empties": empties,
            "sharpness": sel["sharpness"], "constraint": sel["constraint"],
            "wall_time": wall, "lam": lam}


# ---------------------------------------------------------------------------
# subcommands

def _positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _load_graph(args):
    if getattr(args, "edges", None):
        return read_edge_list(args.edges)
    if getattr(args, "matrix", None):
        return read_matrix_market(args.matrix)
    points = read_feature_csv(args.features)
    return build_knn_graph(points, k=args.k)


def _add_common(p, trials_default):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--edges", help="edge list file: 'i j w' per line")
    src.add_argument("--matrix", help="Matrix Market symmetric weight matrix")
    src.add_argument("--features", help="feature CSV; a k-NN graph is built")
    p.add_argument("--k", type=_positive_int, default=10,
                   help="neighbors for --features (default 10)")
    p.add_argument("--classes", type=_positive_int, required=True,
                   help="number of clusters R")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="balance asymmetry (default R-1)")
    p.add_argument("--trials", type=_positive_int, default=trials_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--outer-tol", type=float, default=1e-4)
    p.add_argument("--max-outer", type=_positive_int, default=None)
    p.add_argument("--max-inner", type=_positive_int, default=1000)
    p.add_argument("--ground-truth",
                   help="true labels CSV, for purity in the summary")


def _finish_run(args, g, result, extra=None):
    os.makedirs(args.out, exist_ok=True)
    info = {
        "command": " ".join(sys.argv[1:]),
        "seed": args.seed, "lambda": result["lam"], "classes": args.classes,
        "trials": args.trials, "jobs": args.jobs,
        "n_vertices": g.n_vertices, "n_edges": g.n_edges,
        "selected_trial": result["selected_trial"],
        "selected_energy": result["energies"][result["selected_trial"]],
        "sharpness": result["sharpness"],
        "wall_time_s": result["wall_time"],
    }
    if extra:
        info.update(extra)
    if args.ground_truth:
        truth = read_assignments(args.ground_truth)
        info["purity"] = purity(result["labels"], truth)
    for t, (e, m) in enumerate(zip(result["energies"], result["empties"])):
        info["trial_%02d_energy" % t] = e
        info["trial_%02d_empty" % t] = m
    write_assignments(os.path.join(args.out, "assignments.csv"),
                      result["labels"])
    write_summary(os.path.join(args.out, "summary.txt"), info)
    write_matrix_csv(os.path.join(args.out, "solution.csv"), result["F"])
    write_records_csv(os.path.join(args.out, "records.csv"),
                      result["records"])
    print("selected trial %d: energy=%.8g sharpness=%.6f"
          % (result["selected_trial"],
             result["energies"][result["selected_trial"]],
             result["sharpness"]))
    if "purity" in info:
        print("purity=%.6f" % info["purity"])
    return 0


def cmd_cluster(args):
    g = _load_graph(args)
    init_matrix = load_init_from_file(args.init) if args.init else None
    seeds = None
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",")]
    result = run_protocol(
        g, args.classes, lam=args.lam, n_trials=args.trials, seed=args.seed,
        init_matrix=init_matrix, seed_vertices=seeds, jobs=args.jobs,
        epsilon=args.epsilon, outer_tol=args.outer_tol,
        max_outer=args.max_outer, max_inner=args.max_inner)
    return _finish_run(args, g, result)


def cmd_transduce(args):
    g = _load_graph(args)
    truth = None
    labels = None
    fraction = None
    if args.labels:
        labels = read_label_file(args.labels, g.n_vertices)
        labels.validate(args.classes)
        _label_sets(labels, args.classes)  # every class must be covered
    elif args.label_fraction is not None:
        if not args.ground_truth:
            raise ValueError("--label-fraction needs --ground-truth")
        if not 0.0 < args.label_fraction <= 1.0:
            raise ValueError("--label-fraction must lie in (0, 1]")
        truth = read_assignments(args.ground_truth)
        fraction = args.label_fraction
    else:
        raise ValueError("transduce needs --labels or --label-fraction")
    result = run_protocol(
        g, args.classes, lam=args.lam, n_trials=args.trials, seed=args.seed,
        labels=labels, label_fraction=fraction, ground_truth=truth,
        jobs=args.jobs, epsilon=args.epsilon, outer_tol=args.outer_tol,
        max_outer=args.max_outer, max_inner=args.max_inner)
    extra = {"n_labeled": result["constraint"].n_labeled}
    return _finish_run(args, g, result, extra)


def cmd_graph(args):
    points = read_feature_csv(args.features)
    g = build_knn_graph(points, k=args.k)
    write_edge_list(g, args.out)
    print("vertices=%d edges=%d largest_component=%.4f"
          % (g.n_vertices, g.n_edges, largest_component_fraction(g)))
    return 0


def cmd_trace(args):
    run_dir = args.run_dir
    records_path = os.path.join(run_dir, "records.csv")
    solution_path = os.path.join(run_dir, "solution.csv")
    if not (os.path.isfile(records_path) and os.path.isfile(solution_path)):
        raise FileNotFoundError("%s is not a completed run directory"
                                % run_dir)
    out_dir = args.out or run_dir
    os.makedirs(out_dir, exist_ok=True)
    records = read_records_csv(records_path)
    write_records_csv(os.path.join(out_dir, "trace.csv"), records)
    F = read_matrix_csv(solution_path)
    paths = write_profiles(out_dir, F)
    print("wrote trace.csv and %d profiles to %s" % (len(paths), out_dir))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvclust",
        description="Balanced multiclass clustering by total variation "
                    "minimization on similarity graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="unsupervised clustering")
    _add_common(p, trials_default=31)
    p.add_argument("--init", help="starting matrix CSV for trial 0")
    p.add_argument("--seeds", help="comma-separated seed vertices for trial 0")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("transduce", help="clustering with known labels")
    _add_common(p, trials_default=10)
    p.add_argument("--labels", help="label file: 'vertex class' per line")
    p.add_argument("--label-fraction", type=float, default=None,
                   help="sample this share of each true class as labels")
    p.set_defaults(func=cmd_transduce)

    p = sub.add_parser("graph", help="build a k-NN graph from features")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--out", required=True, help="edge list output file")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("trace", help="emit plot data from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None,
                   help="output directory (default: the run directory)")
    p.set_defaults(func=cmd_trace)
    return parser


def _setup_logging():
    level_name = os.environ.get("MTV_LOG", "").strip().upper()
    if level_name:
        level = getattr(logging, level_name, None)
        if not isinstance(level, int):
            level = logging.INFO
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(handler)
        log.setLevel(level)


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, DegenerateClusterError, RuntimeError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
