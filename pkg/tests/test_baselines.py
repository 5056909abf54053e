import numpy as np
import pytest

from hdcnn import baselines, ingest, metrics
from hdcnn.pipeline import run_cnn
from hdcnn.trainer import TrainConfig

FAST = TrainConfig(epochs=3, seed=0)


@pytest.fixture(scope="module")
def ds():
    return ingest.load_dataset(seed=0)


def test_logreg_separable_toy():
    x = np.array([[-1.0], [1.0]] * 10)
    y = np.array([0, 1] * 10)
    zero = baselines.logreg_train(x, y, epochs=0)
    np.testing.assert_array_equal(zero.predict_proba(x), 0.5)
    model = baselines.logreg_train(x, y)
    assert np.mean((model.predict_proba(x) >= 0.5) == y) == 1.0


def test_logreg_loss_non_increasing(ds):
    x, y = ds.train("std")
    model = baselines.logreg_train(x, y)
    assert len(model.loss_history) == 500
    assert (np.diff(model.loss_history) <= 1e-15).all()
    assert np.isfinite(model.weights).all()


def test_gnb_separated_clusters():
    rng = np.random.default_rng(0)
    x = np.r_[rng.normal(-3, 1, 200), rng.normal(3, 1, 200)][:, None]
    y = np.r_[np.zeros(200), np.ones(200)]
    model = baselines.gnb_train(x, y)
    x_new = np.r_[rng.normal(-3, 1, 500), rng.normal(3, 1, 500)][:, None]
    y_new = np.r_[np.zeros(500), np.ones(500)]
    assert np.mean((baselines.gnb_predict(model, x_new) >= 0.5) == y_new) > 0.95


def test_gnb_midpoint_symmetry():
    x = np.array([[-1.0], [-3.0], [1.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    model = baselines.gnb_train(x, y)
    assert abs(baselines.gnb_predict(model, np.array([[0.0]]))[0] - 0.5) < 1e-9


def test_gnb_invariants(ds):
    x, y = ds.train("std")
    model = baselines.gnb_train(x, y)
    assert model.priors.sum() == pytest.approx(1.0, abs=1e-15)
    assert (model.variances >= baselines.VAR_FLOOR).all()
    post = model.posteriors(ds.test("std")[0])
    np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        baselines.gnb_train(x, np.zeros(len(y)))


def test_mlp_baseline_log_and_determinism(ds):
    cfg = TrainConfig(epochs=4, seed=2, dropout_p=0.0)
    row1, logs = baselines.mlp_baseline(ds, cfg)
    row2, _ = baselines.mlp_baseline(ds, cfg)
    assert len(logs) == 4
    assert row1 == row2


def test_compare_rows(ds):
    rows = baselines.compare(ds, FAST, TrainConfig(epochs=3, seed=0, dropout_p=0.0))
    computed = [r for r in rows if r.source == "computed"]
    annotated = [r for r in rows if r.source == "paper-reported"]
    assert [r.algorithm for r in computed] == [
        "Logistic Regression", "Naive Bayes", "Artificial Neural Network", "Proposed Architecture (1D CNN)"]
    assert len(annotated) == 5
    assert {r.split for r in computed} == {ds.split.fingerprint()}
    for r in rows:
        assert all(0 <= v <= 1 for v in (r.train_acc, r.test_acc, r.precision, r.recall, r.f1, r.auc))
    # proposed row equals a standalone run
    run = run_cnn(ds, FAST)
    cnn = computed[-1]
    assert cnn.test_acc == run.report.accuracy and cnn.auc == run.report.auc and cnn.train_acc == run.train_acc


def test_comparison_serialization(ds):
    rows = baselines.compare(ds, FAST, TrainConfig(epochs=2, seed=0, dropout_p=0.0))
    text = baselines.rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(baselines.COLUMNS)
    assert len(lines) == 1 + len(rows)
    assert lines[-1].endswith(",paper-reported")
    table = baselines.rows_to_text(rows)
    assert table.splitlines()[0].startswith("Algorithm")
    assert "XGBoost" in table
    assert text == baselines.rows_to_csv(baselines.compare(ds, FAST, TrainConfig(epochs=2, seed=0, dropout_p=0.0)))


def test_row_metrics_use_metrics_module(ds):
    x_tr, y_tr = ds.train("std")
    x_te, y_te = ds.test("std")
    model = baselines.logreg_train(x_tr, y_tr)
    rows = baselines.compare(ds, FAST, TrainConfig(epochs=1, seed=0, dropout_p=0.0), include_paper_rows=False)
    rep = metrics.evaluate(y_te, model.predict_proba(x_te))
    assert rows[0].test_acc == rep.accuracy and rows[0].f1 == rep.f1
