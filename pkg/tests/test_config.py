"""JSON run configuration: defaults, validation, and merging."""

import json

import pytest
from pydantic import ValidationError

from hsicwae import config
from hsicwae.synthdata import SyntheticSpec


class TestDefaults:
    def test_empty_config_is_complete(self):
        cfg = config.RunConfig()
        assert cfg.out_dir == "runs/out"
        assert cfg.dataset_dir() == "runs/out/dataset"
        assert cfg.training.preset == "synthetic"
        assert cfg.eval.k_neighbors == 3 and cfg.eval.n_generate == 200

    def test_data_dir_overrides_dataset_location(self):
        cfg = config.RunConfig(data_dir="/tmp/blobs")
        assert cfg.dataset_dir() == "/tmp/blobs"

    def test_load_without_path_gives_defaults(self):
        assert config.load_config() == config.RunConfig()

    def test_sections_are_independent_instances(self):
        a, b = config.RunConfig(), config.RunConfig()
        a.training.encoder_hidden.append(7)
        assert b.training.encoder_hidden == [128, 64]


class TestValidation:
    def test_unknown_root_key_rejected(self):
        with pytest.raises(ValidationError):
            config.RunConfig.model_validate({"outdir": "x"})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ValidationError):
            config.RunConfig.model_validate({"training": {"stepz": 10}})

    @pytest.mark.parametrize("section,key,value", [
        ("training", "batch_size", 3),
        ("training", "steps", -1),
        ("training", "preset", "mnist"),
        ("training", "learning_rate", 0),
        ("eval", "n_generate", 5),
        ("eval", "permutations", 10),
        ("synthetic", "levels", 1),
        ("synthetic", "ecc_max", 1.5),
    ])
    def test_out_of_range_values_rejected(self, section, key, value):
        with pytest.raises(ValidationError):
            config.RunConfig.model_validate({section: {key: value}})

    def test_ecc_order_enforced(self):
        with pytest.raises(ValidationError, match="ecc_min"):
            config.RunConfig.model_validate(
                {"synthetic": {"ecc_min": 0.9, "ecc_max": 0.5}})

    def test_geometry_fit_is_checked_at_spec_build(self):
        # the section accepts any positive slope; the dataclass that does
        # the rendering rejects blobs that cannot fit the frame
        cfg = config.RunConfig.model_validate(
            {"synthetic": {"radius_per_level": 1.5}})
        with pytest.raises(ValueError, match="does not fit"):
            cfg.synthetic.to_spec()


class TestPresetResolution:
    def test_named_preset_fills_lambdas(self):
        cfg = config.RunConfig.model_validate({"training": {"preset": "k562"}})
        tc = cfg.training.to_config()
        assert (tc.lambda1, tc.lambda2, tc.lambda3) == (10.0, 0.2, 0.01)
        assert tc.preset == "k562"

    def test_explicit_lambda_wins_over_preset(self):
        cfg = config.RunConfig.model_validate(
            {"training": {"preset": "k562", "lambda2": 0.7}})
        tc = cfg.training.to_config()
        assert tc.lambda2 == 0.7
        assert tc.lambda1 == 10.0  # untouched ones still come from the preset

    def test_zero_is_an_explicit_value_not_a_missing_one(self):
        cfg = config.RunConfig.model_validate(
            {"training": {"preset": "k562", "lambda3": 0.0}})
        assert cfg.training.to_config().lambda3 == 0.0

    def test_to_config_runs_semantic_validation(self):
        cfg = config.RunConfig.model_validate(
            {"training": {"d_z": 1, "preset": "k562"}})
        with pytest.raises(ValueError, match="d_z"):
            cfg.training.to_config()

    def test_frozen_policy_needs_sigma(self):
        cfg = config.RunConfig.model_validate(
            {"training": {"bandwidth_policy": "frozen"}})
        with pytest.raises(ValueError, match="frozen"):
            cfg.training.to_config()

    def test_to_spec_mirror(self):
        section = config.SyntheticSection(side=20, jitter=0.5, seed=3)
        assert section.to_spec() == SyntheticSpec(side=20, jitter=0.5, seed=3)


class TestLoadAndMerge:
    def test_file_plus_override_merge_by_section(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(
            {"training": {"steps": 5, "seed": 0}, "out_dir": "from_file"}))
        cfg = config.load_config(str(path), {"training": {"seed": 42}})
        assert cfg.training.steps == 5      # kept from the file
        assert cfg.training.seed == 42      # overridden
        assert cfg.out_dir == "from_file"

    def test_scalar_override_replaces(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"out_dir": "a"}))
        cfg = config.load_config(str(path), {"out_dir": "b"})
        assert cfg.out_dir == "b"

    def test_override_section_without_file(self):
        cfg = config.load_config(None, {"eval": {"svg": False}})
        assert cfg.eval.svg is False
        assert cfg.eval.k_neighbors == 3

    def test_malformed_json_is_a_value_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValueError, match="invalid JSON"):
            config.load_config(str(path))

    def test_non_object_root_rejected(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ValueError, match="object"):
            config.load_config(str(path))

    def test_missing_file_is_an_io_error(self, tmp_path):
        with pytest.raises(OSError):
            config.load_config(str(tmp_path / "nope.json"))
