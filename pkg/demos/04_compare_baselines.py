# %% [markdown]
# # Comparison table
#
# Logistic regression, Gaussian naive Bayes and a small MLP on standardized
# features, against the CNN on integer codes, all on one shared split.
# Rows for classifiers that are not re-implemented are appended with
# `source = paper-reported`.

# %%
from hdcnn import baselines, ingest
from hdcnn.trainer import TrainConfig

ds = ingest.load_dataset(seed=0)
rows = baselines.compare(ds, TrainConfig(seed=0))
print(baselines.rows_to_text(rows))
