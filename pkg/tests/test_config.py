"""Flat config parsing, precedence, and dataclass builders."""

import pytest

from ctckit import config as cfgmod
from ctckit.errors import InvalidInputError


class TestParsing:
    def test_defaults_resolve(self):
        flat = cfgmod.resolve()
        assert flat["data.vocab_size"] == 8
        assert flat["cr.alpha"] == 0.2
        assert flat["train.objective"] == "ctc"
        assert flat["train.fair_cost"] is True

    def test_text_parsing(self):
        text = """
        # a comment
        data.vocab_size = 5
        cr.alpha = 0.3   # trailing comment
        train.objective = sr_ctc
        cr.normalize_by_frames = true
        """
        got = cfgmod.parse_config_text(text)
        assert got == {
            "data.vocab_size": 5,
            "cr.alpha": 0.3,
            "train.objective": "sr_ctc",
            "cr.normalize_by_frames": True,
        }

    def test_unknown_key(self):
        with pytest.raises(InvalidInputError):
            cfgmod.parse_config_text("data.bogus = 1")

    def test_bad_int(self):
        with pytest.raises(InvalidInputError):
            cfgmod.parse_config_text("data.vocab_size = many")

    def test_bad_bool(self):
        with pytest.raises(InvalidInputError):
            cfgmod.parse_config_text("train.fair_cost = sometimes")

    def test_missing_equals(self):
        with pytest.raises(InvalidInputError):
            cfgmod.parse_config_text("just a line")

    def test_precedence(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("data.num_train = 111\ntrain.epochs = 9\n")
        flat = cfgmod.resolve(
            preset="smoke", file=str(cfg), assignments=["train.epochs=3"]
        )
        # file overrides preset, --set overrides file
        assert flat["data.num_train"] == 111
        assert flat["train.epochs"] == 3
        # untouched preset values survive
        assert flat["data.num_test"] == 24

    def test_unknown_preset(self):
        with pytest.raises(InvalidInputError):
            cfgmod.resolve(preset="warehouse")

    def test_bad_objective_rejected(self):
        with pytest.raises(InvalidInputError):
            cfgmod.resolve(assignments=["train.objective=rnnt"])

    def test_round_trip_through_text(self):
        flat = cfgmod.resolve(preset="desk")
        again = cfgmod.parse_config_text(cfgmod.config_to_text(flat))
        assert again == flat

    def test_every_key_documented(self):
        for key, (default, doc) in cfgmod.KEY_TABLE.items():
            assert doc.strip(), key


class TestBuilders:
    def test_data_config(self):
        flat = cfgmod.resolve(assignments=["data.noise_std=0.7"])
        dc = cfgmod.data_config(flat)
        assert dc.noise_std == 0.7
        assert dc.vocab_size == 8

    def test_augment_config_objective_ratio(self):
        flat = cfgmod.resolve()
        base = cfgmod.augment_config(flat)
        cr = cfgmod.augment_config(flat, for_objective="cr_ctc")
        assert base.time_scale_ratio == 1.0
        assert cr.time_scale_ratio == 2.5
        assert cr.effective_num_time_masks == 25

    def test_cr_and_sr_configs(self):
        flat = cfgmod.resolve(
            assignments=["cr.target_mode=flow_gradient", "sr.beta=0.5"]
        )
        assert cfgmod.cr_config(flat).target_mode == "flow_gradient"
        assert cfgmod.sr_config(flat).beta == 0.5

    def test_encoder_config(self):
        flat = cfgmod.resolve(assignments=["model.hidden_dim=12"])
        assert cfgmod.encoder_config(flat).hidden_dim == 12
