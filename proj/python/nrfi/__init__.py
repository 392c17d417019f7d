"""Random forests turned into compact neural networks by imitation learning."""

import json

from ._core import (
    DataError,
    DimensionError,
    FeatureStats,
    Forest,
    FormatError,
    MappedNetwork,
    Mlp,
    NrfiError,
    make_synthetic,
    map_direct,
)
from . import _core


def imitate(forest, stats, hidden=(32, 32), generation=None, training=None, *, pool_size=2000,
            probe_size=2000, hard_labels=False, X_test=None, y_test=None):
    """Train a student on data generated from `forest`.

    `generation` and `training` are dicts overriding the defaults. Returns the
    student Mlp and the report as a dict.
    """
    gen = json.loads(_core.default_generation())
    gen.update(generation or {})
    train = json.loads(_core.default_training())
    train.update(training or {})
    student, report = _core.imitate(forest, stats, list(hidden), json.dumps(gen), json.dumps(train),
                                    pool_size, probe_size, hard_labels, X_test, y_test)
    return student, json.loads(report)


__all__ = [
    "DataError", "DimensionError", "FeatureStats", "Forest", "FormatError", "MappedNetwork", "Mlp",
    "NrfiError", "imitate", "make_synthetic", "map_direct",
]
