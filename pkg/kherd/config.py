import os
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional
from dotenv import load_dotenv
from kherd.constants import (
    Environment, DEFAULT_CONFIG, PRESETS, ErrorMessage)
from kherd.exceptions import ConfigError

basedir = Path(__file__).parent.parent.absolute()
load_dotenv(basedir / '.env')

logger = logging.getLogger(__name__)

VALID_LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']


def get_env_variable(var_name, default=None, required=False):
    """Get environment variable with validation."""
    value = os.getenv(var_name, default)
    if required and not value:
        raise ConfigError(
            f"Required environment variable '{var_name}' is not set", field=var_name)
    return value


class Config:
    """Base configuration class."""

    # ============================================
    # ENVIRONMENT
    # ============================================

    ENV = get_env_variable('KHERD_ENV', Environment.DEFAULT)
    LOG_LEVEL = get_env_variable('KHERD_LOG_LEVEL', 'INFO').upper()
    LOG_DIR = get_env_variable('KHERD_LOG_DIR', str(basedir / 'logs'))
    OUTPUT_DIR = get_env_variable('KHERD_OUTPUT_DIR', DEFAULT_CONFIG['out'])
    DEFAULT_SEED = int(get_env_variable('KHERD_DEFAULT_SEED', str(DEFAULT_CONFIG['seed'])))

    DEBUG = False
    TESTING = False

    def __init__(self):
        """Validate configuration on initialization."""
        if self.LOG_LEVEL not in VALID_LOG_LEVELS:
            logger.warning(f"Unknown KHERD_LOG_LEVEL '{self.LOG_LEVEL}', using INFO")
            self.LOG_LEVEL = 'INFO'


class DevelopmentConfig(Config):
    """Development configuration: verbose console logging."""
    DEBUG = True
    TESTING = False


class ProductionConfig(Config):
    """Production configuration: rotating log files."""
    DEBUG = False
    TESTING = False


class TestConfig(Config):
    """Test configuration."""
    TESTING = True
    DEBUG = False
    LOG_LEVEL = 'WARNING'
    DEFAULT_SEED = DEFAULT_CONFIG['seed']
    OUTPUT_DIR = DEFAULT_CONFIG['out']

    def __init__(self):
        # For testing, environment variables are ignored
        pass


# Configuration dictionary for easy access
config = {
    Environment.DEVELOPMENT: DevelopmentConfig,
    Environment.PRODUCTION: ProductionConfig,
    Environment.TESTING: TestConfig,
    'default': DevelopmentConfig
}


def get_config():
    """Get configuration based on environment."""
    env = get_env_variable('KHERD_ENV', Environment.DEFAULT)
    return config.get(env, config['default'])


# ============================================
# EXPERIMENT SETTINGS
# ============================================

def experiment_defaults(app_config: Mapping[str, Any]) -> Dict[str, Any]:
    """Experiment defaults with the app's environment overrides applied."""
    values = dict(DEFAULT_CONFIG)
    values['seed'] = app_config['DEFAULT_SEED']
    values['out'] = app_config['OUTPUT_DIR']
    return values


def normalize_key(key: str) -> str:
    """Config files may use flag spelling (--t-grid) or attribute spelling (t_grid)."""
    return key.lstrip('-').replace('-', '_')


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Read a JSON config file whose keys mirror the flag names.

    Args:
        path: Path to the JSON file, or None

    Returns:
        dict: Normalized settings (empty when path is None)

    Raises:
        ConfigError: If the file is missing, unreadable or not a JSON object
    """
    if not path:
        return {}

    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(ErrorMessage.MISSING_FILE.format(path=path), field='config')

    try:
        data = json.loads(config_path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ConfigError(
            ErrorMessage.INVALID_VALUE.format(field='config', reason=str(e)), field='config')

    if not isinstance(data, dict):
        raise ConfigError(
            ErrorMessage.INVALID_VALUE.format(field='config', reason='expected a JSON object'),
            field='config')

    return {normalize_key(k): v for k, v in data.items()}


def resolve_settings(
    defaults: Mapping[str, Any],
    file_values: Mapping[str, Any],
    flag_values: Mapping[str, Any],
) -> Dict[str, Any]:
    """
    Layer settings: explicit flags override config-file values override defaults.

    Flags left unset on the command line arrive as None and do not override.
    A `preset` (from any layer) fills values that neither the file nor the
    flags set explicitly.
    """
    for key in file_values:
        if key not in defaults:
            raise ConfigError(ErrorMessage.UNKNOWN_KEY.format(key=key), field=key)

    settings = dict(defaults)
    settings.update(file_values)
    explicit_flags = {k: v for k, v in flag_values.items() if v is not None}
    settings.update(explicit_flags)

    preset_name = settings.get('preset')
    if preset_name:
        if preset_name not in PRESETS:
            raise ConfigError(
                ErrorMessage.INVALID_VALUE.format(field='preset', reason=f"unknown preset '{preset_name}'"),
                field='preset')
        for key, value in PRESETS[preset_name].items():
            if key not in file_values and key not in explicit_flags:
                settings[key] = value

    return settings
