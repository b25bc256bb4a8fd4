"""Tests for config loading: YAML and JSON files into frozen dataclasses."""

import json

import pytest

from lazyrag.config import ConfigError, RunConfig, WorldConfig, load_run_config


class TestDefaults:
    def test_run_config_defaults(self):
        cfg = RunConfig()
        assert cfg.world.n_clips == 200
        assert cfg.world.seed == 7
        assert cfg.costs.captioner == 1500.0
        assert cfg.embedding.dimension == 64
        assert cfg.planner.k == 8
        assert cfg.engine.max_iterations == 2

    def test_none_path_gives_defaults(self):
        assert load_run_config(None) == RunConfig()

    def test_world_vocabulary_roundtrip(self):
        w = WorldConfig(objects=("car", "bus"), colors=("red",))
        v = w.vocabulary()
        assert v.objects == ("car", "bus")
        assert v.colors == ("red",)


class TestLoading:
    def test_yaml_overrides(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text(
            "world:\n  n_clips: 50\n  seed: 3\n"
            "planner:\n  k: 4\n"
            "embedding:\n  dimension: 256\n"
        )
        cfg = load_run_config(p)
        assert cfg.world.n_clips == 50
        assert cfg.world.seed == 3
        assert cfg.planner.k == 4
        assert cfg.embedding.dimension == 256
        # untouched sections keep their defaults
        assert cfg.costs.captioner == 1500.0

    def test_json_overrides(self, tmp_path):
        p = tmp_path / "run.json"
        p.write_text(json.dumps({"world": {"n_clips": 10}}))
        assert load_run_config(p).world.n_clips == 10

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("worlds:\n  n_clips: 10\n")
        with pytest.raises(ConfigError):
            load_run_config(p)

    def test_unknown_field_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("world:\n  clips: 10\n")
        with pytest.raises(ConfigError):
            load_run_config(p)

    def test_unsupported_extension_rejected(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text("x = 1")
        with pytest.raises(ConfigError):
            load_run_config(p)

    def test_non_mapping_document_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("- just\n- a\n- list\n")
        with pytest.raises(ConfigError):
            load_run_config(p)

    def test_vocab_lists_become_tuples(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("world:\n  objects: [car, bus]\n  colors: [red]\n")
        cfg = load_run_config(p)
        assert cfg.world.objects == ("car", "bus")
        assert cfg.world.colors == ("red",)

    def test_section_values_feed_validation(self, tmp_path):
        # invalid planner combination must fail at load time, not later
        p = tmp_path / "run.yaml"
        p.write_text("planner:\n  top_n: 5\n  k: 9\n")
        with pytest.raises(ValueError):
            load_run_config(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "absent.yaml")
