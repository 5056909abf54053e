# %% [markdown]
# # Confusion matrix, precision/recall/F1 and ROC
#
# First the metric definitions on the published confusion matrix, then the
# same report for a freshly trained model, with its ROC points written to CSV.

# %%
from pathlib import Path

from hdcnn import ingest, metrics
from hdcnn.pipeline import run_cnn
from hdcnn.trainer import TrainConfig

published = metrics.ConfusionMatrix(tn=24, fp=2, fn=0, tp=36)
print("accuracy %.4f" % metrics.accuracy(published))
print("precision %.4f recall %.4f f1 %.4f" % metrics.prf1(published))

# %%
ds = ingest.load_dataset(seed=0)
run = run_cnn(ds, TrainConfig(seed=0))
print(run.report.to_json())

# %%
_, y_test = ds.test()
curve = metrics.roc(y_test, run.test_probs)
Path("demo_out").mkdir(exist_ok=True)
Path("demo_out/roc.csv").write_text(curve.to_csv())
print("AUC", round(curve.auc, 4), "from", len(curve.points), "ROC points")
