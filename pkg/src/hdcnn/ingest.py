"""Cleveland heart-disease ingestion: parsing, imputation, encoding, splits.

The CNN consumes one integer index per clinical attribute (offset encoded so
every attribute owns a disjoint slice of the embedding vocabulary). The
baseline classifiers consume z-scored real features instead. Both views are
built from the same imputed, binarized records and live in one
:class:`EncodedDataset`.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MISSING = None
N_CELLS = 14
N_FEATURES = 13


class ParseError(ValueError):
    """A malformed line in a Cleveland-format file."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class VocabularyError(KeyError):
    """A categorical value that the encoding map has never seen."""

    def __init__(self, feature: str, value: float):
        self.feature = feature
        self.value = value
        super().__init__(f"value {float(value):g} of feature {feature!r} is not in the encoding map")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # "categorical" | "continuous"
    valid_range: tuple[float, float]


# Column order of the Cleveland "processed" file. Chest pain and ST slope are
# coded 1..4 and 1..3 in the file (the clinical table labels them from 0).
FEATURES: tuple[FeatureSpec, ...] = (
    FeatureSpec("age", "continuous", (29, 77)),
    FeatureSpec("sex", "categorical", (0, 1)),
    FeatureSpec("chest_pain", "categorical", (1, 4)),
    FeatureSpec("resting_bp", "continuous", (94, 200)),
    FeatureSpec("cholesterol", "continuous", (126, 564)),
    FeatureSpec("fasting_blood_sugar", "categorical", (0, 1)),
    FeatureSpec("resting_ecg", "categorical", (0, 2)),
    FeatureSpec("max_heart_rate", "continuous", (71, 202)),
    FeatureSpec("exercise_angina", "categorical", (0, 1)),
    FeatureSpec("st_depression", "continuous", (0, 6.2)),
    FeatureSpec("st_slope", "categorical", (1, 3)),
    FeatureSpec("vessels_colored", "categorical", (0, 3)),
    FeatureSpec("thallium", "categorical", (3, 7)),
)
FEATURE_NAMES = tuple(f.name for f in FEATURES)


def feature_index(name: str) -> int:
    return FEATURE_NAMES.index(name)


def default_data_path() -> Path:
    """Path of the bundled Cleveland file."""
    return Path(str(resources.files("hdcnn") / "data" / "cleveland.data"))


# ---------------------------------------------------------------------------
# parsing / cleaning
# ---------------------------------------------------------------------------

def parse_records(text: str, n_cells: int = N_CELLS) -> list[list[float | None]]:
    """Parse comma-separated Cleveland records; ``?`` becomes ``MISSING``.

    Blank lines are skipped. A line with the wrong number of cells, or a cell
    that is neither a number nor ``?``, raises :class:`ParseError`.
    """
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != n_cells:
            raise ParseError(line_no, f"expected {n_cells} fields, got {len(cells)}")
        rec = []
        for cell in cells:
            cell = cell.strip()
            if cell == "?":
                rec.append(MISSING)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(line_no, f"cannot parse {cell!r} as a number") from None
            if not math.isfinite(value):
                raise ParseError(line_no, f"non-finite value {cell!r}")
            rec.append(value)
        records.append(rec)
    return records


def load_records(path: str | Path | None = None) -> list[list[float | None]]:
    path = default_data_path() if path is None else Path(path)
    return parse_records(path.read_text())


def _nearest_observed(value: float, observed: np.ndarray) -> float:
    # observed is sorted ascending, so argmin picks the smaller value on ties
    return float(observed[np.argmin(np.abs(observed - value))])


def impute_missing(records, features=FEATURES):
    """Replace MISSING feature cells by the column mean.

    Categorical means are snapped to the nearest value observed in that
    column (ties go to the smaller value). The label column is not touched.
    """
    if not records:
        return []
    out = [list(r) for r in records]
    for j, spec in enumerate(features):
        observed = np.array([r[j] for r in records if r[j] is not MISSING], dtype=np.float64)
        if observed.size == 0:
            raise ValueError(f"column {spec.name!r} has no observed values")
        if observed.size == len(records):
            continue
        fill = float(observed.mean())
        if spec.kind == "categorical":
            fill = _nearest_observed(fill, np.unique(observed))
        for r in out:
            if r[j] is MISSING:
                r[j] = fill
    return out


def binarize_labels(records):
    """Map the raw 0..4 diagnosis code to absence (0) / presence (1)."""
    out = []
    for i, r in enumerate(records):
        raw = r[-1]
        if raw is MISSING or raw != int(raw) or not 0 <= raw <= 4:
            raise ValueError(f"record {i}: label {raw!r} outside 0..4")
        out.append(list(r[:-1]) + [0 if raw == 0 else 1])
    return out


def clean_records(records):
    return binarize_labels(impute_missing(records))


# ---------------------------------------------------------------------------
# integer encoding
# ---------------------------------------------------------------------------

@dataclass
class EncodingMap:
    """Per-feature value tables / quantile bins with disjoint index offsets."""

    features: tuple[FeatureSpec, ...]
    values: dict[str, list[float]]  # categorical: sorted distinct values
    bins: dict[str, list[float]]  # continuous: interior cut-points
    offsets: list[int]
    sizes: list[int]

    @property
    def vocab_size(self) -> int:
        return self.offsets[-1] + self.sizes[-1]

    def encode_value(self, j: int, value: float, unseen: str = "error") -> int:
        spec = self.features[j]
        if spec.kind == "continuous":
            local = int(np.searchsorted(self.bins[spec.name], value, side="right"))
        else:
            table = self.values[spec.name]
            try:
                local = table.index(float(value))
            except ValueError:
                if unseen != "nearest":
                    raise VocabularyError(spec.name, value) from None
                local = int(np.argmin(np.abs(np.asarray(table) - value)))
                log.warning("feature %s: unseen value %r mapped to %r", spec.name, value, table[local])
        return self.offsets[j] + local

    def encode(self, rows, unseen: str = "error") -> np.ndarray:
        """Encode an (n, 13) block of feature values into offset indices."""
        rows = np.asarray(rows, dtype=np.float64)
        out = np.empty(rows.shape, dtype=np.int64)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                out[i, j] = self.encode_value(j, v, unseen)
        return out

    def decode(self, index: int):
        """Return ``(feature name, value)`` or ``(feature name, (lo, hi))``.

        Bin intervals are half-open ``[lo, hi)`` with infinite outer edges.
        """
        if not 0 <= index < self.vocab_size:
            raise IndexError(f"index {index} outside vocabulary of size {self.vocab_size}")
        j = int(np.searchsorted(self.offsets, index, side="right")) - 1
        spec = self.features[j]
        local = index - self.offsets[j]
        if spec.kind == "categorical":
            return spec.name, self.values[spec.name][local]
        edges = [-math.inf, *self.bins[spec.name], math.inf]
        return spec.name, (edges[local], edges[local + 1])

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "kind": f.kind, "valid_range": list(f.valid_range)}
                for f in self.features
            ],
            "values": self.values,
            "bins": self.bins,
            "offsets": self.offsets,
            "sizes": self.sizes,
            "vocab_size": self.vocab_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingMap":
        features = tuple(
            FeatureSpec(f["name"], f["kind"], tuple(f["valid_range"])) for f in d["features"]
        )
        return cls(
            features=features,
            values={k: [float(x) for x in v] for k, v in d["values"].items()},
            bins={k: [float(x) for x in v] for k, v in d["bins"].items()},
            offsets=[int(x) for x in d["offsets"]],
            sizes=[int(x) for x in d["sizes"]],
        )


def build_encoding(train_records, bins_per_continuous: int = 10, features=FEATURES) -> EncodingMap:
    """Build the offset encoding from (imputed) training records.

    Categorical features get one index per distinct observed value.
    Continuous features get ``bins_per_continuous`` quantile bins; values
    outside the training range fall into the outermost bins.
    """
    if bins_per_continuous < 2:
        raise ValueError("bins_per_continuous must be >= 2")
    X = np.asarray([r[: len(features)] for r in train_records], dtype=np.float64)
    if X.size == 0:
        raise ValueError("no training records")
    values, bins, sizes = {}, {}, []
    qs = np.arange(1, bins_per_continuous) / bins_per_continuous
    for j, spec in enumerate(features):
        col = X[:, j]
        if spec.kind == "categorical":
            values[spec.name] = [float(v) for v in np.unique(col)]
            sizes.append(len(values[spec.name]))
        else:
            bins[spec.name] = [float(c) for c in np.quantile(col, qs)]
            sizes.append(bins_per_continuous)
    offsets = [int(x) for x in np.concatenate([[0], np.cumsum(sizes)[:-1]])]
    return EncodingMap(tuple(features), values, bins, offsets, sizes)


# ---------------------------------------------------------------------------
# standardization / splitting
# ---------------------------------------------------------------------------

def fit_standardization(rows) -> tuple[np.ndarray, np.ndarray]:
    """Column means and population standard deviations."""
    X = np.asarray(rows, dtype=np.float64)
    return X.mean(axis=0), X.std(axis=0)


def standardize(rows, means, stds) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != means.shape[0] or stds.shape != means.shape:
        raise ValueError(f"shape mismatch: rows {X.shape}, means {means.shape}, stds {stds.shape}")
    return (X - means) / np.where(stds == 0, 1.0, stds)


@dataclass(frozen=True)
class SplitIndices:
    train_idx: tuple[int, ...]
    test_idx: tuple[int, ...]
    seed: int

    def fingerprint(self) -> str:
        """Short hash identifying the exact train/test partition."""
        h = hashlib.sha256()
        h.update(json.dumps([list(self.train_idx), list(self.test_idx)]).encode())
        return h.hexdigest()[:16]


def split(n: int, ratio: float = 0.8, seed: int = 0) -> SplitIndices:
    """Seeded random permutation; the first floor(ratio*n) indices train."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    n_train = math.floor(ratio * n)
    if n_train == 0 or n_train == n:
        raise ValueError(f"ratio {ratio} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(
        tuple(int(i) for i in perm[:n_train]), tuple(int(i) for i in perm[n_train:]), seed
    )


# ---------------------------------------------------------------------------
# assembled dataset
# ---------------------------------------------------------------------------

@dataclass
class EncodedDataset:
    int_features: np.ndarray  # (n, 13) int64 offset indices
    std_features: np.ndarray  # (n, 13) float64 z-scores
    labels: np.ndarray  # (n,) int64 in {0, 1}
    means: np.ndarray
    stds: np.ndarray
    encoding: EncodingMap
    split: SplitIndices
    raw_features: np.ndarray = field(repr=False, default=None)

    @property
    def n_samples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def vocab_size(self) -> int:
        return self.encoding.vocab_size

    def train(self, view: str = "int"):
        idx = list(self.split.train_idx)
        return self._view(view)[idx], self.labels[idx]

    def test(self, view: str = "int"):
        idx = list(self.split.test_idx)
        return self._view(view)[idx], self.labels[idx]

    def _view(self, view):
        return {"int": self.int_features, "std": self.std_features}[view]

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "encoding": self.encoding.to_dict(),
            "split": {
                "seed": self.split.seed,
                "train_idx": list(self.split.train_idx),
                "test_idx": list(self.split.test_idx),
                "fingerprint": self.split.fingerprint(),
            },
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "labels": self.labels.tolist(),
            "int_features": self.int_features.tolist(),
            "std_features": self.std_features.tolist(),
            "raw_features": self.raw_features.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodedDataset":
        s = d["split"]
        return cls(
            int_features=np.asarray(d["int_features"], dtype=np.int64),
            std_features=np.asarray(d["std_features"], dtype=np.float64),
            labels=np.asarray(d["labels"], dtype=np.int64),
            means=np.asarray(d["means"], dtype=np.float64),
            stds=np.asarray(d["stds"], dtype=np.float64),
            encoding=EncodingMap.from_dict(d["encoding"]),
            split=SplitIndices(tuple(s["train_idx"]), tuple(s["test_idx"]), s["seed"]),
            raw_features=np.asarray(d["raw_features"], dtype=np.float64),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "EncodedDataset":
        return cls.from_dict(json.loads(text))


def prepare_dataset(records, ratio: float = 0.8, seed: int = 0, bins_per_continuous: int = 10) -> EncodedDataset:
    """Clean raw records and build both feature views from a seeded split.

    Encoding tables and standardization statistics come from the training
    rows only. Categorical values that appear only in the test rows are
    mapped to the nearest training value.
    """
    clean = clean_records(records)
    X = np.asarray([r[:N_FEATURES] for r in clean], dtype=np.float64)
    y = np.asarray([r[-1] for r in clean], dtype=np.int64)
    sp = split(len(clean), ratio, seed)
    train_rows = X[list(sp.train_idx)]
    enc = build_encoding(train_rows, bins_per_continuous)
    means, stds = fit_standardization(train_rows)
    return EncodedDataset(
        int_features=enc.encode(X, unseen="nearest"),
        std_features=standardize(X, means, stds),
        labels=y,
        means=means,
        stds=stds,
        encoding=enc,
        split=sp,
        raw_features=X,
    )


def load_dataset(path=None, ratio: float = 0.8, seed: int = 0, bins_per_continuous: int = 10) -> EncodedDataset:
    return prepare_dataset(load_records(path), ratio, seed, bins_per_continuous)
