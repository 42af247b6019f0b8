
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

import json
import subprocess

import jsonschema
import pytest

from test_cli import EXAMPLE, run, small_config


def load(schemas_dir, name):
    schema = json.loads((schemas_dir / name).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def test_example_config_validates(schemas_dir):
    load(schemas_dir, "game_config.schema.json").validate(json.loads(EXAMPLE.read_text()))


def test_schema_rejects_unknown_field(schemas_dir):
    v = load(schemas_dir, "game_config.schema.json")
    bad = json.loads(EXAMPLE.read_text())
    bad["workload"]["epz"] = 1
    assert not v.is_valid(bad)


def test_dataset_and_report_validate(cli, tmp_path, schemas_dir):
    path = small_config(tmp_path)
    run(cli, "simulate", "--game", path, "--out", tmp_path / "ds", check=0)
    load(schemas_dir, "dataset.schema.json").validate(json.loads((tmp_path / "ds" / "dataset.json").read_text()))
    cfg_v = load(schemas_dir, "game_config.schema.json")
    cfg_v.validate(json.loads((tmp_path / "ds" / "dataset.json").read_text())["config"])
    entry_v = load(schemas_dir, "manifest_entry.schema.json")
    for line in (tmp_path / "ds" / "manifest.jsonl").read_text().splitlines():
        entry_v.validate(json.loads(line))

    report_v = load(schemas_dir, "report.schema.json")
    run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "F1,F3", "--seq", "--out", tmp_path / "r.json",
        "--trials", "1", check=0)
    report_v.validate(json.loads((tmp_path / "r.json").read_text()))


def test_fingerprint_report_validates(cli, tmp_path, schemas_dir):
    cfg = {
        "game": "fingerprint",
        "workload": {"kind": "phh"},
        "collector": {"channels": ["page"]},
        "prior": {"kind": "power_law", "list": "bundled", "exponent": 0.5},
        "interest": "cctld",
        "sybils": [{"kind": "rehash_forcer"}],
        "traces": 40,
        "seed": 2,
    }
    path = tmp_path / "fp.json"
    path.write_text(json.dumps(cfg))
    load(schemas_dir, "game_config.schema.json").validate(cfg)
    run(cli, "simulate", "--game", path, "--out", tmp_path / "ds", check=0)
    run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "F1", "--out", tmp_path / "r.json",
        "--trials", "1", check=0)
    load(schemas_dir, "report.schema.json").validate(json.loads((tmp_path / "r.json").read_text()))


def test_sweep_reports_validate(cli, tmp_path, schemas_dir):
    out = tmp_path / "sw"
    run(cli, "sweep", "--eps-list", "0.2", "--traces-per-class", "10", "--features", "F1", "--trials", "1",
        "--out", out, check=0)
    report = json.loads((out / "report_eps_0.2.json").read_text())
    load(schemas_dir, "report.schema.json").validate(report)
    assert report["bound"]["useful"] is True
