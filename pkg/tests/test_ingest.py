import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdcnn import ingest
from hdcnn.ingest import MISSING


@pytest.fixture(scope="module")
def raw():
    return ingest.load_records()


def test_parse_first_line():
    rec = ingest.parse_records("63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,2.3,3.0,0.0,6.0,0.0,0")[0]
    assert len(rec) == 14
    assert rec[0] == 63.0
    assert rec[-1] == 0


def test_parse_bundled_first_line(raw):
    assert raw[0][0] == 63.0 and raw[0][-1] == 0
    assert len(raw) == 303


def test_parse_wrong_arity_names_line():
    with pytest.raises(ingest.ParseError) as exc:
        ingest.parse_records("63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n\n1,2,3\n")
    assert exc.value.line_no == 3
    assert "line 3" in str(exc.value)


def test_parse_missing_marker():
    rec = ingest.parse_records("1,2,3,4,5,6,7,8,9,10,11,?,13,0")[0]
    assert rec[11] is MISSING


def test_parse_garbage_cell():
    with pytest.raises(ingest.ParseError):
        ingest.parse_records("1,2,3,4,5,6,7,8,9,10,11,x,13,0")


def _single_column_records(values, kind):
    spec = (ingest.FeatureSpec("f", kind, (0, 10)),)
    return [[v, 0] for v in values], spec


def test_impute_continuous_mean():
    recs, spec = _single_column_records([1.0, MISSING, 3.0], "continuous")
    out = ingest.impute_missing(recs, spec)
    assert [r[0] for r in out] == [1.0, 2.0, 3.0]


def test_impute_categorical_nearest_observed():
    recs, spec = _single_column_records([0.0, 0.0, 0.0, 3.0, MISSING], "categorical")
    assert ingest.impute_missing(recs, spec)[-1][0] == 0.0


def test_impute_categorical_tie_goes_low():
    recs, spec = _single_column_records([1.0, 3.0, MISSING], "categorical")
    assert ingest.impute_missing(recs, spec)[-1][0] == 1.0


def test_impute_identity_and_full_missing():
    recs, spec = _single_column_records([1.0, 2.0], "continuous")
    assert ingest.impute_missing(recs, spec) == recs
    recs, spec = _single_column_records([MISSING, MISSING], "continuous")
    with pytest.raises(ValueError):
        ingest.impute_missing(recs, spec)


def test_impute_bundled_file(raw):
    clean = ingest.impute_missing(raw)
    assert all(v is not MISSING for r in clean for v in r)
    ca = ingest.feature_index("vessels_colored")
    thal = ingest.feature_index("thallium")
    observed_ca = {r[ca] for r in raw if r[ca] is not MISSING}
    assert {r[ca] for r in clean} <= observed_ca
    assert {r[thal] for r in clean} <= {3.0, 6.0, 7.0}


@pytest.mark.parametrize("raw_label, expected", [(0, 0), (1, 1), (2, 1), (3, 1), (4, 1)])
def test_binarize(raw_label, expected):
    rec = [0.0] * 13 + [float(raw_label)]
    assert ingest.binarize_labels([rec])[0][-1] == expected


@pytest.mark.parametrize("bad", [5.0, -1.0, 1.5, MISSING])
def test_binarize_rejects(bad):
    with pytest.raises(ValueError):
        ingest.binarize_labels([[0.0] * 13 + [bad]])


def test_bundled_label_counts(raw):
    # The genuine Cleveland file has 164 absent / 139 present.
    labels = [r[-1] for r in ingest.clean_records(raw)]
    assert len(labels) == 303
    assert labels.count(0) == 164 and labels.count(1) == 139


def test_encoding_offsets_and_vocab(raw):
    clean = ingest.clean_records(raw)
    enc = ingest.build_encoding(clean, 10)
    sizes = {f.name: s for f, s in zip(enc.features, enc.sizes)}
    assert sizes["sex"] == 2
    assert enc.offsets[0] == 0 and enc.offsets[1] == 10  # age has 10 bins
    assert enc.encode_value(1, 0.0) == 10 and enc.encode_value(1, 1.0) == 11
    assert enc.offsets[2] == 12
    cat_counts = [sizes[n] for n in ("sex", "chest_pain", "thallium", "fasting_blood_sugar", "resting_ecg",
                                     "exercise_angina", "vessels_colored", "st_slope")]
    assert cat_counts == [2, 4, 3, 2, 3, 2, 4, 3]
    assert enc.vocab_size == 23 + 50 == 73


def test_encoding_requires_two_bins(raw):
    with pytest.raises(ValueError):
        ingest.build_encoding(ingest.clean_records(raw), 1)


def test_encoding_clamps_outer_bins(raw):
    enc = ingest.build_encoding(ingest.clean_records(raw), 10)
    age = ingest.feature_index("age")
    assert enc.encode_value(age, 500.0) == enc.offsets[age] + 9
    assert enc.encode_value(age, -5.0) == enc.offsets[age]


def test_encoding_unseen_categorical(raw):
    enc = ingest.build_encoding(ingest.clean_records(raw), 10)
    cp = ingest.feature_index("chest_pain")
    with pytest.raises(ingest.VocabularyError) as exc:
        enc.encode_value(cp, 9.0)
    assert "chest_pain" in str(exc.value)
    assert enc.encode_value(cp, 9.0, unseen="nearest") == enc.encode_value(cp, 4.0)


def test_encoding_roundtrip_and_disjoint(raw):
    clean = ingest.clean_records(raw)
    enc = ingest.build_encoding(clean, 10)
    X = np.asarray([r[:13] for r in clean])
    idx = enc.encode(X)
    assert idx.max() < enc.vocab_size and idx.min() >= 0
    for j in range(13):
        col = idx[:, j]
        assert enc.offsets[j] <= col.min() and col.max() < enc.offsets[j] + enc.sizes[j]
    for i in range(0, 303, 7):
        for j in range(13):
            name, value = enc.decode(int(idx[i, j]))
            assert name == ingest.FEATURE_NAMES[j]
            if isinstance(value, tuple):
                lo, hi = value
                assert lo <= X[i, j] < hi
            else:
                assert value == X[i, j]
    ranges = [set(range(o, o + s)) for o, s in zip(enc.offsets, enc.sizes)]
    assert set().union(*ranges) == set(range(enc.vocab_size))
    assert sum(len(r) for r in ranges) == enc.vocab_size


def test_encoding_dict_roundtrip(raw):
    enc = ingest.build_encoding(ingest.clean_records(raw), 10)
    assert ingest.EncodingMap.from_dict(enc.to_dict()) == enc


def test_standardize_examples():
    z = ingest.standardize([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], [2.0, 5.0], [math.sqrt(2 / 3), 0.0])
    np.testing.assert_allclose(z[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
    assert (z[:, 1] == 0).all()


def test_fit_standardization_population_std():
    means, stds = ingest.fit_standardization([[1.0], [2.0], [3.0]])
    assert means[0] == 2.0
    assert stds[0] == pytest.approx(0.816496580927726, abs=1e-12)


def test_standardize_shape_mismatch():
    with pytest.raises(ValueError):
        ingest.standardize([[1.0, 2.0]], [0.0], [1.0])


def test_split_sizes_and_determinism():
    s = ingest.split(303, 0.8, 7)
    assert len(s.train_idx) == 242 and len(s.test_idx) == 61
    assert sorted(s.train_idx + s.test_idx) == list(range(303))
    assert s == ingest.split(303, 0.8, 7)
    small = ingest.split(10, 0.8, 0)
    assert len(small.train_idx) == 8 and not set(small.train_idx) & set(small.test_idx)


def test_split_seeds_differ():
    perms = {ingest.split(303, 0.8, seed).train_idx for seed in range(10)}
    assert len(perms) == 10


@pytest.mark.parametrize("ratio", [0.0, 1.0, 0.05])
def test_split_empty_side(ratio):
    with pytest.raises(ValueError):
        ingest.split(10, ratio, 0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 500), ratio=st.floats(0.05, 0.95), seed=st.integers(0, 2**31))
def test_split_property(n, ratio, seed):
    n_train = math.floor(ratio * n)
    if n_train in (0, n):
        with pytest.raises(ValueError):
            ingest.split(n, ratio, seed)
        return
    s = ingest.split(n, ratio, seed)
    assert len(s.train_idx) == n_train
    assert sorted(s.train_idx + s.test_idx) == list(range(n))


def test_prepared_dataset_invariants():
    ds = ingest.load_dataset(seed=0)
    assert ds.n_samples == 303
    assert set(np.unique(ds.labels)) == {0, 1}
    assert ds.int_features.shape == (303, 13) and ds.int_features.max() < ds.vocab_size
    x_tr, _ = ds.train("std")
    np.testing.assert_allclose(x_tr.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(x_tr.std(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(
        ds.std_features, ingest.standardize(ds.raw_features, ds.means, ds.stds), atol=0
    )


def test_dataset_json_roundtrip():
    ds = ingest.load_dataset(seed=3)
    back = ingest.EncodedDataset.loads(ds.dumps())
    assert back.dumps() == ds.dumps()
    assert back.split.fingerprint() == ds.split.fingerprint()
