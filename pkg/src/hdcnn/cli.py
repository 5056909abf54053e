"""Command-line entry point: ``hdcnn {ingest,train,evaluate,compare,predict}``.

Exit codes: 0 ok, 2 bad input, 3 training diverged, 4 bad model file,
5 value outside the model's vocabulary.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, baselines, ingest, metrics, modelfile
from .ingest import EncodedDataset, ParseError, VocabularyError
from .pipeline import run_cnn
from .trainer import DivergenceError, TrainConfig, epochs_csv, predict

log = logging.getLogger("hdcnn")

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED, EXIT_MODEL, EXIT_VOCAB = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


@dataclass
class RunConfig:
    data_path: str = ""
    seed: int = 0
    split_ratio: float = 0.8
    bins_per_continuous: int = 10
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.001
    alpha1: float = 0.9
    alpha2: float = 0.99
    eps: float = 1e-8
    dropout_p: float = 0.3
    output_dir: str = "out"

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.alpha1, self.alpha2,
                           self.eps, self.dropout_p, self.seed)

    def validate(self):
        if not self.output_dir:
            raise CliError(EXIT_INPUT, "output_dir must not be empty")
        if not 0 < self.split_ratio < 1:
            raise CliError(EXIT_INPUT, "split ratio must lie strictly between 0 and 1")
        if self.bins_per_continuous < 2:
            raise CliError(EXIT_INPUT, "need at least 2 bins per continuous feature")
        try:
            self.train_config()
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from None
        return self


FLAG_FIELDS = {
    "data": "data_path", "seed": "seed", "epochs": "epochs", "batch_size": "batch_size",
    "lr": "learning_rate", "dropout": "dropout_p", "bins": "bins_per_continuous",
    "split_ratio": "split_ratio", "out": "output_dir",
}


def resolve_config(args) -> RunConfig:
    """Defaults, then ``--config`` JSON, then explicit flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_INPUT, f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(overrides) - known
        if unknown:
            raise CliError(EXIT_INPUT, f"unknown config keys: {sorted(unknown)}")
        cfg = RunConfig(**{**asdict(cfg), **overrides})
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    if not cfg.data_path:
        cfg.data_path = str(ingest.default_data_path())
    return cfg.validate()


# ---------------------------------------------------------------------------
# data helpers
# ---------------------------------------------------------------------------

def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc}") from None


def _raw_features(path):
    """Cleaned (n, 13) feature matrix and labels from a raw file or a dataset cache."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        ds = EncodedDataset.loads(text)
        return ds.raw_features, ds.labels
    try:
        clean = ingest.clean_records(ingest.parse_records(text))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    return np.asarray([r[:13] for r in clean]), np.asarray([r[-1] for r in clean], dtype=np.int64)


def load_run_dataset(cfg: RunConfig) -> EncodedDataset:
    text = _read_text(cfg.data_path)
    if text.lstrip().startswith("{"):
        return EncodedDataset.loads(text)
    try:
        return ingest.prepare_dataset(ingest.parse_records(text), cfg.split_ratio, cfg.seed, cfg.bins_per_continuous)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(path):
    try:
        return modelfile.load(path)
    except OSError as exc:
        raise CliError(EXIT_MODEL, f"cannot read model {path}: {exc}") from None
    except modelfile.ModelFileError as exc:
        raise CliError(EXIT_MODEL, str(exc)) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> dict:
    ds = load_run_dataset(cfg)
    out = _out(cfg)
    (out / "dataset.json").write_text(ds.dumps())
    counts = np.bincount(ds.labels, minlength=2)
    summary = {
        "n_samples": ds.n_samples,
        "label_counts": {"0": int(counts[0]), "1": int(counts[1])},
        "vocab_size": ds.vocab_size,
        "feature_ranges": {
            name: [float(ds.raw_features[:, j].min()), float(ds.raw_features[:, j].max())]
            for j, name in enumerate(ingest.FEATURE_NAMES)
        },
    }
    print(f"samples: {summary['n_samples']}")
    print(f"labels: 0={counts[0]} 1={counts[1]}")
    print(f"vocabulary size: {ds.vocab_size}")
    for name, (lo, hi) in summary["feature_ranges"].items():
        print(f"  {name:<20} {lo:g} .. {hi:g}")
    return summary


def cmd_train(cfg: RunConfig) -> dict:
    ds = load_run_dataset(cfg)
    tc = cfg.train_config()
    try:
        run = run_cnn(ds, tc)
    except DivergenceError as exc:
        raise CliError(EXIT_DIVERGED, str(exc)) from None
    out = _out(cfg)
    split_info = {
        "seed": ds.split.seed,
        "ratio": cfg.split_ratio,
        "test_idx": list(ds.split.test_idx),
        "fingerprint": ds.split.fingerprint(),
    }
    modelfile.save(out / "model.hdcn", run.net, ds.encoding, {"split": split_info, "version": __version__})
    (out / "epochs.csv").write_text(epochs_csv(run.logs))
    manifest = {
        "version": __version__,
        "config": asdict(cfg),
        "data_sha256": _sha256(cfg.data_path),
        "split_fingerprint": ds.split.fingerprint(),
        "vocab_size": ds.vocab_size,
        "n_params": run.net.n_params,
        "final_epoch": asdict(run.logs[-1]),
        "train_accuracy": run.train_acc,
        "metrics": run.report.to_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    last = run.logs[-1]
    print(f"epoch {last.epoch}: loss {last.train_loss:.4f} train {last.train_acc:.4f} test {last.test_acc:.4f}")
    return manifest


def cmd_evaluate(cfg: RunConfig, model_path) -> metrics.MetricsReport:
    net, enc, meta = _load_model(model_path)
    if enc is None:
        raise CliError(EXIT_MODEL, "model file carries no encoding map")
    X, y = _raw_features(cfg.data_path)
    test_idx = meta.get("split", {}).get("test_idx")
    if test_idx is None:
        test_idx = list(range(len(y)))
    if max(test_idx) >= len(y):
        raise CliError(EXIT_INPUT, "data file is smaller than the split stored in the model")
    x_te = enc.encode(X[test_idx], unseen="nearest")
    probs = predict(net, x_te)
    y_te = y[test_idx]
    report = metrics.evaluate(y_te, probs)
    out = _out(cfg)
    (out / "metrics.json").write_text(report.to_json())
    (out / "roc.csv").write_text(metrics.roc(y_te, probs).to_csv())
    print(report.to_json())
    return report


def cmd_compare(cfg: RunConfig):
    ds = load_run_dataset(cfg)
    try:
        rows = baselines.compare(ds, cfg.train_config())
    except DivergenceError as exc:
        raise CliError(EXIT_DIVERGED, str(exc)) from None
    out = _out(cfg)
    (out / "comparison.csv").write_text(baselines.rows_to_csv(rows))
    print(baselines.rows_to_text(rows), end="")
    return rows


def cmd_predict(model_path, record: str):
    net, enc, _ = _load_model(model_path)
    if enc is None:
        raise CliError(EXIT_MODEL, "model file carries no encoding map")
    try:
        recs = ingest.parse_records(record, n_cells=13)
    except ParseError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    if len(recs) != 1 or any(v is None for v in recs[0]):
        raise CliError(EXIT_INPUT, "expected exactly one complete 13-field record")
    try:
        x = enc.encode([recs[0]])
    except VocabularyError as exc:
        raise CliError(EXIT_VOCAB, str(exc)) from None
    prob = float(predict(net, x)[0])
    cls = int(prob >= 0.5)
    print(f"probability {prob:.6f}")
    print(f"class {cls}")
    return prob, cls


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_run_flags(p):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--data", help="Cleveland-format data file or dataset.json cache (default: bundled)")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--split-ratio", type=float)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdcnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "train", "compare"):
        _add_run_flags(sub.add_parser(name))
    p = sub.add_parser("evaluate")
    _add_run_flags(p)
    p.add_argument("--model", required=True)
    p = sub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("record", help="13 comma-separated feature values")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "predict":
            cmd_predict(args.model, args.record)
            return EXIT_OK
        cfg = resolve_config(args)
        if args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.model)
        elif args.command == "compare":
            cmd_compare(cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
