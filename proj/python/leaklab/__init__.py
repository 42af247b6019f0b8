
# Copyright 2026 The LeakLab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Simulated controlled-channel leakage analysis.

Thin wrappers over the C++ core. Functions returning structured results
decode the core's JSON into dicts.
"""

import json as _json
import os as _os

from . import _core
from ._core import (
    ConfigError,
    TraceParseError,
    extract_features,
    feature_names,
    ks_test,
    normalize_trace,
    sample_dummy_counts,
    tokenize,
    verify_dummy_dp,
)

__all__ = [
    "ConfigError",
    "TraceParseError",
    "analyze",
    "config_hash",
    "covert",
    "dp_bound",
    "extract_features",
    "feature_names",
    "ks_test",
    "normalize_trace",
    "sample_dummy_counts",
    "simulate",
    "tokenize",
    "verify_dummy_dp",
]

__version__ = "0.1.0"


def _config_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def dp_bound(eps, delta):
    return _json.loads(_core.dp_bound(eps, delta))


def config_hash(config):
    return _core.config_hash(_config_text(config))


def simulate(config, out_dir=None, jobs=-1):
    out = "" if out_dir is None else _os.fspath(out_dir)
    return _json.loads(_core.simulate(_config_text(config), out, jobs))


def analyze(dataset_dir, features="F1", seq=False, trials=5, split=0.8, seed=0, jobs=1):
    return _json.loads(_core.analyze(_os.fspath(dataset_dir), features, seq, trials, split, seed, jobs))


def covert(bytes=48, reps=100, seed=0):
    return _json.loads(_core.covert(bytes, reps, seed))
