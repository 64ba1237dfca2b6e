import numpy as np
import pytest

from swarmfe.dataset import ColumnSchema, Dataset


def make_dataset(values, labels, names=None):
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = values.shape[1]
    names = names or [f"f{i}" for i in range(m)]
    schema = tuple([ColumnSchema(n, "numeric") for n in names]
                   + [ColumnSchema("label", "label")])
    return Dataset(values=values.copy(), labels=labels.copy(), schema=schema)


def synthetic_split(m, label_fn, n_train=140, n_test=60, seed=0):
    """Random uniform features in [0,1] with labels from label_fn(X) in {1,2}."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_train + n_test, m))
    y = label_fn(X).astype(np.int64) + 1
    return (make_dataset(X[:n_train], y[:n_train]),
            make_dataset(X[n_train:], y[n_train:]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
