# -*- coding: utf-8 -*-
import json
import logging
import os
from pathlib import Path

import h5py
import pytest
from pydantic import ValidationError

from _base import ChecksumError
from runner import (
    ExperimentConfig,
    RunError,
    load_config,
    main,
    parse_window,
    read_partition_csv,
    report,
    run,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "name": "small",
    "D0": ["a"],
    "N_list": [3, 4],
    "audits": {"quasi_minimality_windows": 30},
    "plateau": {"window_radius": 2, "random_windows": 5, "stabilization_radius": 2},
}


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    manifest = run(ExperimentConfig.model_validate(SMALL), str(out))
    return out, manifest


def test_bundled_configs_load():
    config = load_config(str(CONFIGS / "f2-cylinder-a.json"))
    assert config.problem().rho == pytest.approx(0.00025)
    assert config.content_hash == load_config(str(CONFIGS / "f2-cylinder-a.json")).content_hash
    other = config.model_copy(update={"seed": 1})
    assert other.content_hash != config.content_hash
    for name in ("f2-two-cylinders.json", "z2-z3-cylinder.json"):
        load_config(str(CONFIGS / name))


@pytest.mark.parametrize(
    "name", ["missing-phase", "small-dimension", "bad-ladder", "infinite-dihedral"]
)
def test_negative_configs_rejected(name):
    with pytest.raises(ValidationError):
        load_config(str(CONFIGS / "negative" / f"{name}.json"))


def test_config_checks():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({**SMALL, "N_list": [4, 3]})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({**SMALL, "unknown": 1})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({**SMALL, "potential": {"name": "polynomial"}})


def test_run_passes(small_run):
    out, manifest = small_run
    assert manifest.error is None
    assert manifest.passed, manifest.audits
    for name in ("stabilization", "components", "quasi_minimality", "cascade", "decay"):
        assert manifest.audits[name]
    for name in ("plateau_minimal", "oracle_agreement", "action_bridge", "separation"):
        assert manifest.audits[name]
    assert set(manifest.stages.values()) == {"done"}
    for artifact in manifest.artifacts:
        assert (out / artifact).exists()
    assert set(manifest.checksums) == {"fields/field_N3.h5", "fields/field_N4.h5"}
    summary = json.loads((out / "audits.json").read_text())
    assert summary["growth"]["sphere_sizes"][:3] == [1, 4, 12]
    assert summary["cascade"]["triggered"] is False


def test_runs_are_deterministic(small_run, tmp_path):
    out, manifest = small_run
    again = run(ExperimentConfig.model_validate(SMALL), str(tmp_path))
    assert again.checksums == manifest.checksums
    for name in manifest.checksums:
        assert (out / name).read_bytes() == (tmp_path / name).read_bytes()


def test_report(small_run):
    out, _ = small_run
    text = report(str(out / "manifest.json"))
    assert "MISSING" not in text
    assert "plateau:" in text
    assert (out / "report_constants.csv").exists()
    assert (out / "report_decay.csv").exists()


def test_report_flags_missing_and_corrupt(small_run, tmp_path):
    out, _ = small_run
    copy = tmp_path / "copy"
    run(ExperimentConfig.model_validate(SMALL), str(copy))
    os.remove(copy / "cut_edges.csv")
    assert "MISSING artifact: cut_edges.csv" in report(str(copy / "manifest.json"))
    with h5py.File(copy / "fields" / "field_N4.h5", "r+") as h5f:
        h5f["values"][0] += 0.5
    with pytest.raises(ChecksumError):
        report(str(copy / "manifest.json"))


def test_skipped_stages(tmp_path):
    config = ExperimentConfig.model_validate(
        {**SMALL, "audits": {"geometry": False, "plateau": False, "quasi_minimality": False}}
    )
    manifest = run(config, str(tmp_path))
    assert manifest.stages["plateau"] == "skipped"
    assert manifest.stages["geometry"] == "skipped"
    assert "plateau_minimal" not in manifest.audits
    assert "plateau: skipped" in report(str(tmp_path / "manifest.json"))


def test_failed_run_keeps_manifest(tmp_path):
    config = ExperimentConfig.model_validate(
        {**SMALL, "rho": {"kind": "ladder", "ladder": [0.01, 0.001]}}
    )
    with pytest.raises(RunError) as info:
        run(config, str(tmp_path))
    manifest = json.loads(Path(info.value.manifest_path).read_text())
    assert "rho1" in manifest["error"]
    assert manifest["stages"]["solve"] == "done"
    assert "plateau" not in manifest["stages"]


def test_partition_round_trip(small_run, f2):
    out, _ = small_run
    partition = read_partition_csv(str(out / "partition.csv"))
    assert partition.ball.radius == 5
    assert partition.D0[partition.ball.index_of(f2.parse("a"))]
    assert not partition.D0[0]
    window = parse_window(partition, "B1:a")
    assert window.omega.sum() == 5
    with pytest.raises(ValueError):
        parse_window(partition, "C1")


def test_cli(small_run, tmp_path, caplog, capsys):
    out, _ = small_run
    caplog.set_level(logging.INFO, logger="runner")
    assert main(["certify", str(out / "partition.csv"), "B2"]) == 0
    assert main(["audit", str(out / "fields" / "field_N4.h5")]) == 0
    assert main(["report", str(out / "manifest.json")]) == 0
    config_path = tmp_path / "small.json"
    config_path.write_text(json.dumps(SMALL))
    capsys.readouterr()
    assert main(["run", str(config_path), "--output-dir", str(tmp_path / "cli")]) == 0
    assert (tmp_path / "cli" / "manifest.json").exists()
    # stage progress goes to the log, stdout only carries the audit table
    assert "cascade: n1_lower" in caplog.text
    stdout = capsys.readouterr().out
    assert "cascade" in stdout and "n1_lower" not in stdout
