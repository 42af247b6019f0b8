
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

import hashlib
import json
import os
import pathlib
import subprocess

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
EXAMPLE = ROOT / "schemas" / "examples" / "phh_distinguish.json"


def run(cli, *args, env=None, check=None):
    full_env = dict(os.environ)
    full_env.pop("LEAKLAB_SEED", None)
    full_env.update(env or {})
    p = subprocess.run([cli, *map(str, args)], capture_output=True, text=True, env=full_env)
    if check is not None:
        assert p.returncode == check, p.stdout + p.stderr
    return p


def small_config(tmp_path, **over):
    cfg = json.loads(EXAMPLE.read_text())
    cfg["traces_per_class"] = 20
    cfg["sybils"][0]["n"] = 9
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(pathlib.Path(root).rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def kv(stdout):
    out = {}
    for line in stdout.splitlines():
        parts = line.split(None, 1)
        if len(parts) == 2:
            out.setdefault(parts[0], parts[1])
    return out


def test_bound_prints_reference_values(cli):
    p = run(cli, "bound", "--eps", "0.5", "--delta", "0.01", check=0)
    vals = kv(p.stdout)
    assert vals["bound"] == "0.1672"
    assert vals["normalized"] == "0.3344"
    assert "warning" not in p.stderr


def test_bound_warns_outside_useful_regime(cli):
    p = run(cli, "bound", "--eps", "1.2", "--delta", "0", check=0)
    assert kv(p.stdout)["useful"] == "false"
    assert "not useful" in p.stderr


def test_bound_positional_and_json(cli):
    p = run(cli, "bound", "0.5", "0.01", "--json", check=0)
    j = json.loads(p.stdout)
    assert j["bound"] == pytest.approx(0.167180317675032, abs=1e-12)


def test_bad_arguments_exit_2(cli):
    run(cli, "bound", "--eps", "-1", check=2)
    run(cli, "frobnicate", check=2)


def test_config_error_reports_pointer(cli, tmp_path):
    path = small_config(tmp_path, workload={"kind": "phh", "epz": 1})
    p = run(cli, "simulate", "--game", path, "--dry-run", check=2)
    assert "/workload/epz" in p.stderr


def test_dry_run_writes_nothing(cli, tmp_path):
    path = small_config(tmp_path)
    out = tmp_path / "out"
    p = run(cli, "simulate", "--game", path, "--out", out, "--dry-run", check=0)
    assert not out.exists()
    lines = [l for l in p.stdout.splitlines() if l.startswith("run ")]
    assert len(lines) == 40
    assert kv(p.stdout)["runs"] == "40"


def test_simulate_is_deterministic_across_jobs(cli, tmp_path):
    path = small_config(tmp_path)
    a = run(cli, "simulate", "--game", path, "--out", tmp_path / "a", "--jobs", "1", check=0)
    b = run(cli, "simulate", "--game", path, "--out", tmp_path / "b", "--jobs", "4", check=0)
    assert kv(a.stdout)["digest"] == kv(b.stdout)["digest"]
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")
    assert len(list((tmp_path / "a" / "traces").iterdir())) == 40


def test_env_seed_override_changes_output(cli, tmp_path):
    path = small_config(tmp_path)
    a = run(cli, "simulate", "--game", path, "--dry-run", check=0)
    b = run(cli, "simulate", "--game", path, "--dry-run", env={"LEAKLAB_SEED": "99"}, check=0)
    assert kv(a.stdout)["config_hash"] != kv(b.stdout)["config_hash"]


def test_analyze_outputs(cli, tmp_path):
    path = small_config(tmp_path)
    run(cli, "simulate", "--game", path, "--out", tmp_path / "ds", check=0)
    report = tmp_path / "r.json"
    p = run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "union", "--seq", "--out", report,
            "--plot", tmp_path / "r.svg", "--ks", tmp_path / "ks.csv", "--export-features", tmp_path / "f.csv",
            "--export-tokens", tmp_path / "t.txt", "--trials", "2", check=0)
    r = json.loads(report.read_text())
    names = [x["feature_set"] for x in r["results"]]
    assert names == ["F1", "F2", "F3", "F4", "F5", "union", "seq"]
    assert r["results"][0]["normalized_advantage"]["mean"] == pytest.approx(1.0)
    assert (tmp_path / "r.svg").read_text().startswith("<svg")
    assert (tmp_path / "ks.csv").read_text().splitlines()[0] == "feature,D,p_value,mean_0,mean_1"
    header = (tmp_path / "f.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "label" and len(header) == 562
    assert len((tmp_path / "t.txt").read_text().splitlines()) == 40
    assert "union" in p.stdout

    again = tmp_path / "r2.json"
    run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "union", "--seq", "--out", again,
        "--trials", "2", "--jobs", "3", check=0)
    assert again.read_bytes() == report.read_bytes()


def test_analyze_warns_on_missing_channels(cli, tmp_path):
    path = small_config(tmp_path, collector={"channels": ["page"]})
    run(cli, "simulate", "--game", path, "--out", tmp_path / "ds", check=0)
    p = run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "F2", "--out", tmp_path / "r.json",
            "--trials", "1", check=0)
    assert "warning:" in p.stderr
    r = json.loads((tmp_path / "r.json").read_text())
    assert r["warnings"]


def test_analyze_unknown_feature_set_exit_2(cli, tmp_path):
    path = small_config(tmp_path)
    run(cli, "simulate", "--game", path, "--out", tmp_path / "ds", check=0)
    run(cli, "analyze", "--dataset", tmp_path / "ds", "--features", "F9", "--out", tmp_path / "r.json", check=2)


def test_sweep_writes_csv(cli, tmp_path):
    out = tmp_path / "sweep"
    p = run(cli, "sweep", "--eps-list", "0.1,0.5", "--traces-per-class", "10", "--features", "F1", "--trials", "1",
            "--out", out, check=0)
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "eps,delta,adv_F1,bound,normalized_bound,useful"
    assert len(lines) == 3
    assert lines[1].startswith("0.1,")
    assert (out / "sweep.svg").exists()
    assert (out / "report_eps_0.1.json").exists()
    assert p.stdout.splitlines()[0] == lines[0]


def test_covert_default_run(cli):
    p = run(cli, "covert", "--bytes", "48", "--reps", "100", check=0)
    vals = kv(p.stdout)
    assert vals["error_rate"] == "0"
    assert vals["faults_per_byte"] == "5"
    assert vals["bytes"] == "4800"


def test_covert_zero_bytes(cli):
    p = run(cli, "covert", "--bytes", "0", "--reps", "3", check=0)
    assert kv(p.stdout)["error_rate"] == "0"


def test_covert_fault_injection_reports_position(cli, tmp_path):
    save = tmp_path / "cv"
    run(cli, "covert", "--bytes", "8", "--reps", "1", "--seed", "4", "--save", save, check=0)
    run(cli, "covert", "--replay", save, check=0)
    trace = save / "rep_000.trace"
    lines = trace.read_text().splitlines()
    ci = [i for i, l in enumerate(lines) if l.startswith("CI ")]
    enc_page = lines[ci[0]].split()[1]
    enc = [i for i in ci if lines[i].split()[1] == enc_page]
    target = enc[5]
    parts = lines[target].split()
    parts[3] = str((int(parts[3]) + 1) % 256)
    lines[target] = " ".join(parts)
    trace.write_text("\n".join(lines) + "\n")
    p = run(cli, "covert", "--replay", save, check=4)
    assert "rep 0 byte 5 " in p.stdout
    assert kv(p.stdout)["byte_errors"] == "1"
