import json

import numpy as np
import pytest

from fraudadv import harness, ingest
from fraudadv.harness import (TOGGLES, ExperimentConfig, FieldDiff, Metrics, MetricsReport,
                              PerturbationDiff, changed_features, count_perturbed, emit_report,
                              parse_report, raw_flags, render_diff, render_tables, run_experiment,
                              run_sweep, sample_seed, select_targets, sparsest_success)
from fraudadv.model import ThresholdedClassifier

from conftest import stump_model


def test_toggle_table():
    assert TOGGLES[1] == (False, False, False, False)
    assert TOGGLES[5] == (True, True, True, True)
    for i in range(2, 6):
        # each configuration adds exactly one toggle to the previous one
        assert sum(TOGGLES[i]) == sum(TOGGLES[i - 1]) + 1
        assert all(a <= b for a, b in zip(TOGGLES[i - 1], TOGGLES[i]))


def test_experiment_config_builds_attack_config(german_setup):
    cfg = ExperimentConfig(4, overrides={"max_iters": 3})
    w = german_setup.weights(cfg)
    a = cfg.attack_config("zoo", 0.2, w, seed=5)
    assert a.norm == "custom" and a.use_threshold and a.use_realistic and not a.use_editability
    assert a.max_iters == 3 and a.seed == 5
    assert ExperimentConfig(3).attack_config("zoo", 0.2, w, 0).norm == "l2"
    with pytest.raises(ValueError):
        ExperimentConfig(6)
    with pytest.raises(ValueError):
        ExperimentConfig(1, kinds=("fgsm",))


def test_select_targets_true_positives_only():
    clf = ThresholdedClassifier(stump_model(), 0.3)
    X = np.array([[2.0, 0], [2.0, 0], [0.0, 0], [0.0, 0]])
    y = np.array([1, 0, 1, 0])
    assert select_targets(clf, X, y).tolist() == [0]
    assert select_targets(clf, X[2:], y[2:]).tolist() == []


def test_changed_features_tolerances(mixed_schema):
    a = np.array([1, 2, 3, 0.5, 1.0, 0, 1, 0])
    b = a.copy()
    b[3] += 1e-12  # float within tolerance
    assert not changed_features(a, b, mixed_schema).any()
    b[4] += 1e-6
    b[5:] = [1, 0, 0]
    assert changed_features(a, b, mixed_schema).tolist() == [False, False, False, False, True, True]


def _diff(changed):
    fields = [FieldDiff(n, "x", "y" if n in changed else "x", n in changed)
              for n in ("status_checking", "duration", "telephone")]
    return PerturbationDiff(0, "zoo", 5, True, fields, 0.275, 0.127)


def test_count_perturbed(german_schema):
    checked = raw_flags(german_schema, "checked")
    assert count_perturbed(_diff(set()), checked) == 0
    assert count_perturbed(_diff({"status_checking"}), checked) == 1
    assert count_perturbed(_diff({"status_checking", "duration", "telephone"}), checked) == 2
    locked = raw_flags(german_schema, "noneditable")
    assert count_perturbed(_diff({"duration"}), locked) == 0


def test_single_field_diff_rendering():
    text = render_diff(_diff({"status_checking"}))
    assert "status_checking" in text and "duration" not in text
    assert "0.275" in text and "0.127" in text


def test_sample_seeds_distinct_and_stable():
    seeds = {sample_seed(0, e, k, s) for e in range(1, 6) for k in harness.KINDS for s in range(20)}
    assert len(seeds) == 5 * 3 * 20
    assert sample_seed(3, 2, "zoo", 9) == sample_seed(3, 2, "zoo", 9)


def test_report_round_trip(tmp_path):
    report = MetricsReport([Metrics("zoo", 3, 10, 9, 90.0, 0.0, 12, 3, 100.5, 0.7, 1),
                            Metrics("zoo", 1, 10, 0, 0.0, None, 0, 0, 50.0, None, 10)],
                           {"seed": 1})
    diffs = [_diff({"status_checking"}), _diff(set())]
    diffs[1].sample_id = 4
    out = emit_report(report, diffs, tmp_path)
    back, back_diffs = parse_report(out)
    assert back == report
    assert sorted(d.sample_id for d in back_diffs) == [0, 4]
    assert back_diffs[0] == diffs[0]
    assert "Success Rate (%)" in (tmp_path / "tables.txt").read_text()
    assert sparsest_success(diffs).sample_id == 4


def test_empty_diff_list(tmp_path):
    report = MetricsReport([Metrics("boundary", 2, 1, 1, 100.0, 5.0, 1, 0, 10.0, 1.0)])
    emit_report(report, [], tmp_path)
    assert not (tmp_path / "diffs").exists()
    assert parse_report(tmp_path)[0] == report


def test_tables_layout():
    report = MetricsReport([Metrics("boundary", e, 5, 5, 100.0, 0.0, 3, 0, 1.0, 0.1) for e in (3, 4)])
    text = render_tables(report)
    assert text.splitlines()[1].split("|")[1].strip() == "Boundary"
    assert "# Non-Editable Fields" in text


@pytest.fixture(scope="module")
def small_run(german_setup):
    targets = select_targets(german_setup.clf, german_setup.X_test, german_setup.y_test)[:6]
    out = {}
    for e in (1, 2, 5):
        cfg = ExperimentConfig(e, ("hopskipjump",), {"max_iters": 15, "max_queries": 4000})
        out[e] = run_experiment(cfg, german_setup, seed=0, targets=targets)
    return out


def test_small_ablation_shape(small_run):
    m1, m2, m5 = (small_run[e][0][0] for e in (1, 2, 5))
    assert m1.n_targets == 6 and m1.success_rate <= m2.success_rate
    assert m2.unrealistic_rate > 0
    assert m5.unrealistic_rate == 0 and m5.noneditable_fields_perturbed == 0
    for e in (1, 2, 5):
        ms, diffs = small_run[e]
        assert len(diffs) == 6
        assert ms[0].n_success == sum(d.success for d in diffs)


def test_success_is_rechecked_with_true_tau(small_run, german_setup):
    for d in small_run[1][1]:
        assert d.success == (d.adversarial_score <= german_setup.tau)


def test_parallel_matches_serial(german_setup):
    targets = select_targets(german_setup.clf, german_setup.X_test, german_setup.y_test)[:4]
    cfg = ExperimentConfig(5, ("zoo",), {"max_iters": 10})
    a, _ = run_experiment(cfg, german_setup, seed=1, jobs=1, targets=targets)
    b, _ = run_experiment(cfg, german_setup, seed=1, jobs=2, targets=targets)
    assert a == b


def test_no_targets_is_an_error(german_setup):
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(3), german_setup, targets=np.zeros(0, dtype=np.int64))


def test_sweep_meta(german_setup):
    report, diffs = run_sweep(german_setup, experiments=(3,), kinds=("zoo",),
                              overrides={"max_iters": 2}, seed=0)
    meta = json.loads(report.to_json())["meta"]
    assert meta["experiments"] == [3] and meta["kinds"] == ["zoo"]
    assert meta["n_targets"] == report.metrics[0].n_targets == len(diffs)


def test_sparsest_prefers_realistic_runs():
    loose = _diff(set())
    loose.experiment = 2
    tight = _diff({"duration"})
    assert sparsest_success([loose, tight]) is tight
    tight.success = False
    assert sparsest_success([loose, tight]) is loose
