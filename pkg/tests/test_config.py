import pytest

from tqdmotion.config import ConfigError, ModelConfig, parse_key_values
from tqdmotion.exceptions import InvalidParameterError


def test_roundtrip_through_text():
    cfg = ModelConfig(tau3=0.01, boundary="toroidal", renormalize_kernels=True)
    assert ModelConfig.from_text(cfg.to_text()) == cfg


def test_partial_files_keep_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# overrides\nomega_half = 3\n\nsigma2=2.0\n")
    cfg = ModelConfig.from_file(p)
    assert cfg.omega_half == 3 and cfg.sigma2 == 2.0 and cfg.n3 == ModelConfig().n3


def test_sigma3_is_twice_sigma2():
    assert ModelConfig(sigma2=1.25).sigma3 == 2.5


@pytest.mark.parametrize("text,match", [
    ("bogus=1", "unknown config key: bogus"),
    ("n1=2.5", "n1"),
    ("tau1=abc", "tau1"),
    ("boundary=mirror", "boundary"),
    ("a=1\na=2", "duplicate"),
    ("novalue", "key=value"),
])
def test_bad_config_text(text, match):
    with pytest.raises(ConfigError, match=match):
        ModelConfig.from_text(text)


@pytest.mark.parametrize("kw", [dict(tau1=0), dict(alpha2=0.001), dict(omega_half=0),
                                dict(baseline_d=0), dict(dt=-1.0), dict(sigma1=-1.0)])
def test_invalid_values(kw):
    with pytest.raises(InvalidParameterError):
        ModelConfig(**kw)


def test_parse_key_values_strips_comments():
    assert parse_key_values("a = 1  # one\n# all comment\nb=x") == {"a": "1", "b": "x"}
