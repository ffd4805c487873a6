"""Tests for the configuration schema, pipeline stages, and CLI entry."""

import json
from pathlib import Path

import numpy as np
import pytest

from eigenop import cli
from eigenop.ioformats import read_matrix, sha256_of


def _small_rotation_config():
    return {
        "system": {"name": "rotation"},
        "truncation": {"cutoffs": [3, 3]},
        "decomposition": {"d_values": [1], "n_leading": 3},
        "evaluation": {"y": 0.0, "s": 0.1},
    }


def _small_discrete_config():
    return {
        "system": {"name": "torus_translation", "params": {"n": 4, "gtilde": 0.7}},
        "truncation": {"cutoffs": [3, 3]},
        "evaluation": {"y": 0.3, "i": 1, "y_sample_count": 4},
    }


def test_resolve_config_fills_defaults():
    cfg = cli.resolve_config(_small_rotation_config())
    assert cfg["grid"]["multiplier"] == 4
    assert cfg["spectra"]["tol"] == 1e-6
    assert cfg["evaluation"]["steps_per_unit_time"] == 200
    assert cfg["smoothing"] is None
    assert cfg["decomposition"]["n_leading"] == 3


def test_resolve_config_n_leading_defaults_to_max_rank():
    raw = _small_rotation_config()
    raw["decomposition"] = {"d_values": [1, 5], "subspace_rank": 2}
    cfg = cli.resolve_config(raw)
    assert cfg["decomposition"]["n_leading"] == 5


def test_schema_rejects_unknown_keys():
    raw = _small_rotation_config()
    raw["extra_section"] = {}
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(raw)


def test_schema_rejects_missing_required():
    with pytest.raises(cli.ConfigError):
        cli.resolve_config({"system": {"name": "rotation"}})


def test_schema_rejects_bad_types():
    raw = _small_rotation_config()
    raw["truncation"] = {"cutoffs": ["three"]}
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(raw)


def test_bundled_configs_resolve():
    for name in ("rotation", "gaussian_vortex", "stratospheric", "torus_translation"):
        cfg = cli.bundled_config(name)
        assert cfg["system"]["name"] == name
    with pytest.raises(cli.ConfigError):
        cli.bundled_config("no_such_config")


def test_main_exit_code_on_schema_violation(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"system": {"name": "rotation"}, "truncation": {}, "unknown": 1}))
    code = cli.main(["assemble", "--config", str(bad), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_SCHEMA
    assert "config error" in capsys.readouterr().err


def test_main_exit_code_on_invalid_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = cli.main(["all", "--config", str(bad), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_SCHEMA


def test_main_exit_code_on_wrong_cutoff_count(tmp_path):
    raw = _small_rotation_config()
    raw["truncation"] = {"cutoffs": [3, 3, 3]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    code = cli.main(["assemble", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_SCHEMA


def test_full_continuous_pipeline(tmp_path):
    cfg = cli.resolve_config(_small_rotation_config())
    out = tmp_path / "run"
    manifest = cli.run_pipeline(cfg, out, cli.ALL_STAGES)
    assert manifest["config_sha256"] == sha256_of(cfg)
    assert (out / "manifest.json").exists()
    assert (out / "generator.matrix.json").exists()
    assert (out / "spectrum.json").exists()
    assert (out / "subspace_d1.matrix.json").exists()
    assert (out / "eigenoperator_spectrum.json").exists()
    # One-dimensional fiber: the field stage notes the skip.
    assert any("cocycle-field skipped" in note for note in manifest["notes"])
    doc = json.loads((out / "eigenoperator_spectrum.json").read_text())
    assert doc["max_abs_real_part"] < 1e-8


def test_pipeline_reruns_are_byte_identical(tmp_path):
    cfg = cli.resolve_config(_small_rotation_config())
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    cli.run_pipeline(cfg, out_a, cli.ALL_STAGES)
    cli.run_pipeline(cfg, out_b, cli.ALL_STAGES)
    for path_a in sorted(out_a.iterdir()):
        path_b = out_b / path_a.name
        assert path_a.read_bytes() == path_b.read_bytes(), path_a.name


def test_manifest_has_no_timestamps(tmp_path):
    cfg = cli.resolve_config(_small_rotation_config())
    manifest = cli.run_pipeline(cfg, tmp_path / "run", ("assemble",))
    text = json.dumps(manifest)
    assert "timestamp" not in text and "created" not in text and "date" not in text


def test_cached_generator_is_reused(tmp_path):
    cfg = cli.resolve_config(_small_rotation_config())
    out = tmp_path / "run"
    cli.run_pipeline(cfg, out, ("assemble",))
    first = read_matrix(out / "generator.matrix.json")["entries"]
    # A second context over the same directory must load the matrix from
    # disk instead of reassembling it.
    ctx = cli.PipelineContext(cfg, out)
    assert ctx.generator_matrix.meta.get("cached") is True
    assert np.array_equal(ctx.generator_matrix.entries, first)


def test_cache_ignored_when_config_changes(tmp_path):
    cfg = cli.resolve_config(_small_rotation_config())
    out = tmp_path / "run"
    cli.run_pipeline(cfg, out, ("assemble",))
    other = cli.resolve_config(_small_rotation_config())
    other["evaluation"]["y"] = 1.0
    ctx = cli.PipelineContext(other, out)
    assert ctx.generator_matrix.meta.get("cached") is None


def test_discrete_pipeline_stages(tmp_path):
    cfg = cli.resolve_config(_small_discrete_config())
    out = tmp_path / "run"
    manifest = cli.run_pipeline(cfg, out, cli.ALL_STAGES)
    assert (out / "bins.json").exists()
    bins = json.loads((out / "bins.json").read_text())
    assert len(bins["orbit"]) == 4
    assert max(bins["equivariance_residuals"]) < 1e-10
    assert (out / "eigenoperator_spectrum.json").exists()
    assert any("assemble skipped" in note for note in manifest["notes"])


def test_main_runs_single_stage(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(_small_rotation_config()))
    out = tmp_path / "out"
    code = cli.main(["assemble", "--config", str(path), "--out", str(out)])
    assert code == 0
    assert (out / "generator.matrix.json").exists()
    assert "wrote" in capsys.readouterr().out
