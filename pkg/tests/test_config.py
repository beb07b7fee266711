import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrs_stream.config import ConfigError, RunConfig, dump_config, load_config, parse_config_text


def test_defaults():
    cfg = load_config(None)
    assert cfg.tau_context == 15
    assert cfg.gamma == 0.30 and cfg.gamma_prime == 0.40
    assert cfg.delta_band_samples == 5 and cfg.lambda_slope == 2
    assert cfg.beta_update == 0.125 and cfg.eta_max_waves == 6 and cfg.kappa_noise_free == 3


def test_single_override(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# tuning\ndelta_band_samples = 7\n")
    cfg = load_config(path)
    assert cfg == RunConfig().replace(delta_band_samples=7)


def test_gamma_order_enforced():
    with pytest.raises(ConfigError, match="gamma"):
        parse_config_text("gamma = 0.5\ngamma_prime = 0.4\n")


@pytest.mark.parametrize(
    "text",
    ["nope = 1", "gamma 0.3", "gamma = abc", "tau_context = 2.5", "gamma = 0.2\ngamma = 0.25",
     "tau_context = 0", "beta_update = 1.5", "rho_min_uv = 200"],
)
def test_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_int_given_as_float_text():
    assert parse_config_text("tau_context = 15.0").tau_context == 15


@given(st.integers(1, 50), st.floats(0.01, 0.39), st.integers(1, 10))
def test_dump_parse_round_trip(tau, gamma, delta):
    cfg = RunConfig(tau_context=tau, gamma=gamma, delta_band_samples=delta)
    assert parse_config_text(dump_config(cfg)) == cfg
