import json

import pytest

from kherd.config import (
    DevelopmentConfig, ProductionConfig, TestConfig, experiment_defaults, get_config, load_config_file,
    resolve_settings)
from kherd.constants import DEFAULT_CONFIG
from kherd.exceptions import ConfigError
from kherd.utils.validators import SettingsValidator, parse_int_list, parse_name_list


class TestConfigClasses:
    """Test cases for environment configuration."""

    def test_get_config_follows_environment(self, monkeypatch):
        monkeypatch.setenv('KHERD_ENV', 'production')
        assert get_config() is ProductionConfig
        monkeypatch.setenv('KHERD_ENV', 'testing')
        assert get_config() is TestConfig

    def test_unknown_environment_falls_back(self, monkeypatch):
        monkeypatch.setenv('KHERD_ENV', 'staging')
        assert get_config() is DevelopmentConfig

    def test_test_config_defaults(self, app):
        defaults = experiment_defaults(app.config)
        assert defaults['seed'] == 0
        assert defaults['out'] == DEFAULT_CONFIG['out']
        assert defaults['T'] == DEFAULT_CONFIG['T']
        assert app.config['TESTING']

    def test_app_environment_overrides_seed_and_output(self, app):
        app.config.update(DEFAULT_SEED=9, OUTPUT_DIR='elsewhere')
        defaults = experiment_defaults(app.config)
        assert (defaults['seed'], defaults['out']) == (9, 'elsewhere')
        assert DEFAULT_CONFIG['seed'] == 0


class TestSettings:
    """Test cases for layered settings."""

    def test_flags_override_file_override_defaults(self):
        settings = resolve_settings(DEFAULT_CONFIG, {'T': 3, 'dim': 4}, {'T': 7, 'dim': None})
        assert settings['T'] == 7
        assert settings['dim'] == 4
        assert settings['components'] == DEFAULT_CONFIG['components']

    def test_unknown_file_key(self):
        with pytest.raises(ConfigError) as excinfo:
            resolve_settings(DEFAULT_CONFIG, {'temperature': 1.0}, {})
        assert excinfo.value.field == 'temperature'

    def test_preset_fills_unset_values(self):
        settings = resolve_settings(DEFAULT_CONFIG, {}, {'preset': 'moments-5d'})
        assert settings['dim'] == 5 and settings['components'] == 100
        settings = resolve_settings(DEFAULT_CONFIG, {'components': 10}, {'preset': 'moments-5d'})
        assert settings['components'] == 10

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            resolve_settings(DEFAULT_CONFIG, {}, {'preset': 'scatter-9d'})

    def test_config_file_accepts_flag_spelling(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'--t-grid': '1,10', 'n-seeds': 5}))
        assert load_config_file(path) == {'t_grid': '1,10', 'n_seeds': 5}

    def test_config_file_errors(self, tmp_path):
        assert load_config_file(None) == {}
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / 'missing.json')
        broken = tmp_path / 'broken.json'
        broken.write_text('{"T": ')
        with pytest.raises(ConfigError):
            load_config_file(broken)
        listed = tmp_path / 'list.json'
        listed.write_text('[1, 2]')
        with pytest.raises(ConfigError):
            load_config_file(listed)


class TestSettingsValidator:
    """Test cases for per-command validation."""

    def _settings(self, **overrides):
        settings = dict(DEFAULT_CONFIG)
        settings.update(overrides)
        return settings

    def test_defaults_are_valid_for_every_command(self):
        for command in ('gm-herd', 'compare', 'posterior'):
            ok, errors = SettingsValidator(self._settings(), command).validate()
            assert ok, errors

    def test_negative_sample_count(self):
        ok, errors = SettingsValidator(self._settings(T=-1), 'gm-herd').validate()
        assert not ok
        assert errors[0][0] == 'T'

    def test_non_positive_bandwidth(self):
        with pytest.raises(ConfigError) as excinfo:
            SettingsValidator(self._settings(sigma=0.0), 'gm-herd').raise_for_errors()
        assert excinfo.value.field == 'sigma'

    def test_empirical_herd_needs_input(self):
        ok, errors = SettingsValidator(self._settings(), 'empirical-herd').validate()
        assert ('input' in {field for field, _ in errors}) and not ok

    def test_mixture_checks_skip_with_target_file(self):
        settings = self._settings(target='mixture.json', components=0)
        assert SettingsValidator(settings, 'gm-herd').validate()[0]
        settings = self._settings(components=0)
        assert not SettingsValidator(settings, 'gm-herd').validate()[0]

    def test_inverted_mean_range(self):
        ok, errors = SettingsValidator(self._settings(mean_low=5.0, mean_high=1.0), 'compare').validate()
        assert not ok and errors[0][0] == 'mean_low'

    def test_posterior_settings(self):
        assert SettingsValidator(self._settings(prior_var=float('inf')), 'posterior').validate()[0]
        assert SettingsValidator(self._settings(proposal_scale=0.0), 'posterior').validate()[0]
        assert not SettingsValidator(self._settings(thin=0), 'posterior').validate()[0]
        assert not SettingsValidator(self._settings(prior_var=-1.0), 'posterior').validate()[0]

    def test_grid_values(self):
        assert not SettingsValidator(self._settings(t_grid='0,10'), 'compare').validate()[0]
        assert not SettingsValidator(self._settings(t_grid='a,b'), 'compare').validate()[0]
        assert not SettingsValidator(self._settings(functions=''), 'compare').validate()[0]


class TestParsers:
    """Test cases for list parsing."""

    def test_parse_int_list(self):
        assert parse_int_list('10, 50,100') == [10, 50, 100]
        assert parse_int_list([1, 2]) == [1, 2]
        assert parse_int_list(None) is None
        assert parse_int_list('') is None
        with pytest.raises(ConfigError):
            parse_int_list('1,x')

    def test_parse_name_list(self):
        assert parse_name_list('moment1,sin_norm') == ['moment1', 'sin_norm']
        assert parse_name_list(['moment2']) == ['moment2']
