import math
import os

import numpy as np
import pytest

from tvclust import (IterationRecord, LabelConstraint, SolverConfig,
                     read_edge_list, run, run_protocol, write_edge_list,
                     seeded_propagation_init)
from tvclust.cli import (main, write_assignments, read_assignments,
                         write_summary, read_summary, write_matrix_csv,
                         read_matrix_csv, write_records_csv, read_records_csv,
                         write_profiles, _sample_labels, _label_sets,
                         RECORD_FIELDS)

from conftest import make_line_graph


def test_assignments_round_trip(tmp_path):
    path = str(tmp_path / "a.csv")
    labels = np.array([0, 2, 1, 1])
    write_assignments(path, labels)
    assert np.array_equal(read_assignments(path), labels)


def test_assignments_reads_bare_column(tmp_path):
    path = str(tmp_path / "a.csv")
    with open(path, "w") as fh:
        fh.write("class\n0\n1\n1\n")
    assert read_assignments(path).tolist() == [0, 1, 1]


def test_assignments_reader_errors(tmp_path):
    path = str(tmp_path / "a.csv")
    with open(path, "w") as fh:
        fh.write("# only comments\n")
    with pytest.raises(ValueError):
        read_assignments(path)
    with open(path, "w") as fh:
        fh.write("0,1\n2,0\n")  # vertex 1 never appears
    with pytest.raises(ValueError):
        read_assignments(path)


def test_summary_round_trip(tmp_path):
    path = str(tmp_path / "s.txt")
    info = {"seed": 3, "energy": 0.12345678901234567, "note": "ok"}
    write_summary(path, info)
    got = read_summary(path)
    assert got["seed"] == "3"
    assert float(got["energy"]) == info["energy"]
    assert got["note"] == "ok"


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(81)
    F = rng.normal(size=(7, 3))
    path = str(tmp_path / "m.csv")
    write_matrix_csv(path, F)
    assert np.array_equal(read_matrix_csv(path), F)


def test_records_csv_round_trip(tmp_path, line20):
    F0 = seeded_propagation_init(line20, [0, 19])
    _, records = run(line20, F0, SolverConfig(), 1.0)
    records.append(IterationRecord(
        outer_index=99, inner_iterations=5, total_energy=0.5,
        per_cluster_energy=(0.2, 0.3), descent_lhs=1.0, descent_rhs=0.5,
        wall_time=0.01, descent_forced=True))
    path = str(tmp_path / "r.csv")
    write_records_csv(path, records)
    got = read_records_csv(path)
    assert len(got) == len(records)
    for a, b in zip(got, records):
        assert a.outer_index == b.outer_index
        assert a.inner_iterations == b.inner_iterations
        assert a.total_energy == b.total_energy
        assert a.per_cluster_energy == b.per_cluster_energy
        assert a.descent_forced == b.descent_forced
    assert got[-1].descent_forced is True


def test_records_csv_rejects_foreign_header(tmp_path):
    path = str(tmp_path / "r.csv")
    with open(path, "w") as fh:
        fh.write("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_records_csv(path)


def test_write_profiles(tmp_path):
    F = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
    paths = write_profiles(str(tmp_path), F)
    assert [os.path.basename(p) for p in paths] == ["profile_0.csv",
                                                    "profile_1.csv"]
    with open(paths[0]) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "vertex_index,value,sorted_value"
    rows = [line.split(",") for line in lines[1:]]
    assert [float(r[1]) for r in rows] == [0.9, 0.2, 0.5]
    assert [float(r[2]) for r in rows] == [0.2, 0.5, 0.9]


def test_sample_labels_covers_every_class():
    truth = np.array([0] * 40 + [1] * 5)
    rng = np.random.default_rng(82)
    lc = _sample_labels(truth, 2, 0.1, rng)
    picked = lc.labels
    assert np.all(picked[picked >= 0] == truth[picked >= 0])
    assert (picked == 0).sum() == 4
    assert (picked == 1).sum() == 1  # never less than one labeled vertex
    with pytest.raises(ValueError):
        _sample_labels(truth, 3, 0.1, rng)


def test_label_sets_requires_full_coverage():
    lc = LabelConstraint(np.array([0, -1, 1, -1]))
    sets = _label_sets(lc, 2)
    assert sets[0].tolist() == [0]
    assert sets[1].tolist() == [2]
    with pytest.raises(ValueError):
        _label_sets(lc, 3)


def test_protocol_selects_the_balanced_split(line20):
    result = run_protocol(line20, 2, n_trials=3, seed=0, seed_vertices=[0, 19])
    labels = result["labels"]
    want = np.array([0] * 10 + [1] * 10)
    assert (np.array_equal(labels, want) or np.array_equal(labels, 1 - want))
    assert result["energies"][result["selected_trial"]] == pytest.approx(0.2)
    assert len(result["energies"]) == 3
    assert result["sharpness"] > 0.99
    assert result["lam"] == 1.0


def test_protocol_is_reproducible_across_job_counts(line20):
    kw = dict(n_classes=2, n_trials=3, seed=4)
    a = run_protocol(line20, **kw, jobs=1)
    b = run_protocol(line20, **kw, jobs=2)
    assert a["energies"] == b["energies"]
    assert a["selected_trial"] == b["selected_trial"]
    assert np.array_equal(a["F"], b["F"])


def test_protocol_honors_labels(line20):
    lc = LabelConstraint.from_pairs([(0, 0), (19, 1)], 20)
    result = run_protocol(line20, 2, n_trials=2, seed=0, labels=lc)
    F = result["F"]
    assert np.array_equal(F[0], [1.0, 0.0])
    assert np.array_equal(F[19], [0.0, 1.0])
    assert result["constraint"].n_labeled == 2


def _write_blobs_csv(path):
    rng = np.random.default_rng(83)
    a = rng.normal(0.0, 0.1, size=(15, 2))
    b = rng.normal(0.0, 0.1, size=(15, 2)) + np.array([8.0, 0.0])
    pts = np.vstack([a, b])
    np.savetxt(path, pts, delimiter=",")
    return np.array([0] * 15 + [1] * 15)


def test_main_graph_and_cluster_end_to_end(tmp_path, capsys):
    feats = str(tmp_path / "points.csv")
    edges = str(tmp_path / "graph.txt")
    truth_path = str(tmp_path / "truth.csv")
    out = str(tmp_path / "run")
    truth = _write_blobs_csv(feats)
    write_assignments(truth_path, truth)

    assert main(["graph", "--features", feats, "--k", "3",
                 "--out", edges]) == 0
    stdout = capsys.readouterr().out
    assert "vertices=30" in stdout
    g = read_edge_list(edges)
    assert g.n_vertices == 30

    assert main(["cluster", "--edges", edges, "--classes", "2",
                 "--trials", "3", "--seed", "0", "--out", out,
                 "--ground-truth", truth_path]) == 0
    stdout = capsys.readouterr().out
    assert "selected trial" in stdout
    assert "purity=1.0" in stdout
    labels = read_assignments(os.path.join(out, "assignments.csv"))
    assert len(labels) == 30
    # the two blobs separate perfectly
    assert len(set(labels[:15].tolist())) == 1
    assert len(set(labels[15:].tolist())) == 1
    assert labels[0] != labels[15]
    info = read_summary(os.path.join(out, "summary.txt"))
    for key in ("seed", "lambda", "selected_trial", "selected_energy",
                "sharpness", "trial_00_energy"):
        assert key in info
    assert read_records_csv(os.path.join(out, "records.csv"))
    F = read_matrix_csv(os.path.join(out, "solution.csv"))
    assert F.shape == (30, 2)

    assert main(["trace", out]) == 0
    capsys.readouterr()
    assert os.path.isfile(os.path.join(out, "trace.csv"))
    assert os.path.isfile(os.path.join(out, "profile_0.csv"))
    assert os.path.isfile(os.path.join(out, "profile_1.csv"))


def test_main_transduce_with_label_file(tmp_path, capsys, line20):
    edges = str(tmp_path / "line.txt")
    write_edge_list(line20, edges)
    labels_path = str(tmp_path / "labels.txt")
    with open(labels_path, "w") as fh:
        fh.write("0 0\n19 1\n")
    out = str(tmp_path / "run")
    assert main(["transduce", "--edges", edges, "--classes", "2",
                 "--labels", labels_path, "--trials", "2", "--out", out]) == 0
    capsys.readouterr()
    labels = read_assignments(os.path.join(out, "assignments.csv"))
    assert labels[0] == 0
    assert labels[19] == 1
    info = read_summary(os.path.join(out, "summary.txt"))
    assert info["n_labeled"] == "2"


def test_main_error_exits(tmp_path, capsys, line20):
    edges = str(tmp_path / "line.txt")
    write_edge_list(line20, edges)
    # nonexistent input file
    assert main(["cluster", "--edges", str(tmp_path / "missing.txt"),
                 "--classes", "2"]) == 2
    # transduce without any label source
    assert main(["transduce", "--edges", edges, "--classes", "2",
                 "--out", str(tmp_path)]) == 2
    # label fraction without ground truth
    assert main(["transduce", "--edges", edges, "--classes", "2",
                 "--label-fraction", "0.1", "--out", str(tmp_path)]) == 2
    # trace on a directory without run files
    assert main(["trace", str(tmp_path / "empty")]) == 2
    assert "error:" in capsys.readouterr().err
    # argparse handles invalid option values itself
    with pytest.raises(SystemExit):
        main(["cluster", "--edges", edges, "--classes", "0"])
    capsys.readouterr()
