# %% [markdown]
# # Training with and without dropout
#
# Train the default configuration (150 epochs, batch 32, Adam) twice on the
# same split, once with dropout 0.3 and once without, and write the
# per-epoch accuracy curves to CSV for plotting.

# %%
from pathlib import Path

from hdcnn import ingest
from hdcnn.pipeline import run_cnn
from hdcnn.trainer import TrainConfig, epochs_csv

SEED = 0
out = Path("demo_out")
out.mkdir(exist_ok=True)
ds = ingest.load_dataset(seed=SEED)

# %%
for dropout_p in (0.3, 0.0):
    run = run_cnn(ds, TrainConfig(seed=SEED, dropout_p=dropout_p))
    (out / f"epochs_dropout{dropout_p}.csv").write_text(epochs_csv(run.logs))
    last = run.logs[-1]
    print(f"dropout {dropout_p}: train {last.train_acc:.4f} test {last.test_acc:.4f} "
          f"gap {last.train_acc - last.test_acc:.4f}")

# %% [markdown]
# Plot `epoch` against `train_acc` and `test_acc` from each CSV with any
# plotting tool.
