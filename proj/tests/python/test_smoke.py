import json

import numpy as np
import pytest

import nrfi


@pytest.fixture(scope="module")
def moons():
    X, y = nrfi.make_synthetic("two_moons", 400, features=2, noise=0.15, seed=3)
    X = np.asarray(X)
    forest = nrfi.Forest.train(X[:300], y[:300], trees=10, seed=1)
    return X, np.asarray(y), forest


def test_synthetic_shapes():
    X, y = nrfi.make_synthetic("blobs", 50, features=4, seed=1, classes=3)
    assert np.asarray(X).shape == (50, 4)
    assert set(y) <= {0, 1, 2}


def test_forest_probabilities(moons):
    X, y, forest = moons
    p = forest.predict_proba(X)
    assert p.shape == (400, 2)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert forest.accuracy(X[300:], list(y[300:])) > 0.8


def test_mapping_matches_forest(moons):
    X, _, forest = moons
    net = nrfi.map_direct(forest)
    np.testing.assert_allclose(net.forward(X), forest.predict_proba(X), atol=1e-12)
    assert net.parameter_count == forest.direct_mapping_size()


def test_json_round_trip(moons):
    X, _, forest = moons
    again = nrfi.Forest.from_json(forest.to_json())
    np.testing.assert_array_equal(again.predict_proba(X), forest.predict_proba(X))


def test_imitation(moons):
    X, y, forest = moons
    stats = nrfi.FeatureStats(X[:300])
    student, report = nrfi.imitate(forest, stats, (16, 16), training={"epochs": 5, "seed": 2},
                                   pool_size=200, probe_size=200, X_test=X[300:], y_test=list(y[300:]))
    assert student.layer_sizes == [2, 16, 16, 2]
    assert len(report["train_loss"]) == 5
    assert 0.0 <= report["fidelity"] <= 1.0
    out = student.forward((X[:5] - np.asarray(stats.mean)) / np.asarray(stats.stddev))
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    assert json.loads(student.to_json())["layer_sizes"] == [2, 16, 16, 2]


def test_errors_are_translated(moons):
    X, _, forest = moons
    with pytest.raises(nrfi.DimensionError):
        forest.predict_proba(np.zeros((2, 5)))
    with pytest.raises(nrfi.NrfiError):
        nrfi.make_synthetic("spirals", 10)
    with pytest.raises(ValueError):
        nrfi.map_direct(forest, mode="fuzzy")
