# kherd/utils/validators.py
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from kherd.exceptions import ConfigError


def parse_int_list(value) -> Optional[List[int]]:
    """'10,50,100' or [10, 50, 100] -> [10, 50, 100]; None stays None."""
    if value is None or value == '':
        return None
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(',') if p.strip()]
    else:
        parts = list(value)
    try:
        return [int(p) for p in parts]
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value for 't_grid': expected integers, got {value!r}", field='t_grid')


def parse_name_list(value) -> List[str]:
    if isinstance(value, str):
        return [p.strip() for p in value.split(',') if p.strip()]
    return [str(p) for p in value]


class SettingsValidator:
    """Validator for resolved command settings"""

    def __init__(self, settings: Dict[str, Any], command: str):
        self.settings = settings
        self.command = command
        self.errors: List[Tuple[str, str]] = []

    def validate(self):
        """Validate all settings relevant to the command"""
        if not self.settings:
            self.errors.append(('config', "No settings received."))
            return False, self.errors

        self._validate_seed()
        self._validate_sample_count()
        self._validate_sigma()
        self._validate_t_grid()

        if self.command in ('gm-herd', 'compare'):
            self._validate_mixture()
        if self.command in ('gm-herd', 'empirical-herd'):
            self._validate_herding()
        if self.command == 'empirical-herd':
            self._validate_input()
        if self.command == 'compare':
            self._validate_comparison()
        if self.command == 'posterior':
            self._validate_posterior()

        return len(self.errors) == 0, self.errors

    def raise_for_errors(self) -> None:
        """Raise ConfigError naming the first offending field."""
        ok, errors = self.validate()
        if not ok:
            field, message = errors[0]
            raise ConfigError(message, field=field)

    def _integer(self, key: str, minimum: int) -> Optional[int]:
        value = self.settings.get(key)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            self.errors.append((key, f"'{key}' must be an integer, got {value!r}"))
            return None
        if value < minimum:
            self.errors.append((key, f"'{key}' must be >= {minimum}, got {value}"))
            return None
        return int(value)

    def _positive(self, key: str, allow_none: bool = False, allow_zero: bool = False) -> None:
        value = self.settings.get(key)
        if value is None and allow_none:
            return
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            self.errors.append((key, f"'{key}' must be a number, got {value!r}"))
            return
        if not np.isfinite(value) and not (key == 'prior_var' and value > 0):
            self.errors.append((key, f"'{key}' must be finite, got {value}"))
        elif value < 0 or (value == 0 and not allow_zero):
            self.errors.append((key, f"'{key}' must be {'>= 0' if allow_zero else '> 0'}, got {value}"))

    def _validate_seed(self):
        self._integer('seed', 0)

    def _validate_sample_count(self):
        self._integer('T', 0)

    def _validate_sigma(self):
        self._positive('sigma', allow_none=True)

    def _validate_t_grid(self):
        try:
            grid = parse_int_list(self.settings.get('t_grid'))
        except ConfigError as e:
            self.errors.append(('t_grid', str(e)))
            return
        if grid is not None and (not grid or min(grid) < 1):
            self.errors.append(('t_grid', "'t_grid' values must be >= 1"))

    def _validate_mixture(self):
        if self.settings.get('target'):
            return
        self._integer('dim', 1)
        self._integer('components', 1)
        self._positive('cov_scale')
        low, high = self.settings.get('mean_low'), self.settings.get('mean_high')
        if isinstance(low, (int, float)) and isinstance(high, (int, float)) and low > high:
            self.errors.append(('mean_low', f"'mean_low' ({low}) must not exceed 'mean_high' ({high})"))

    def _validate_herding(self):
        self._integer('n_seeds', 1)
        self._integer('max_iter', 0)

    def _validate_input(self):
        if not self.settings.get('input'):
            self.errors.append(('input', "'input' is required: path to a CSV sample matrix"))

    def _validate_comparison(self):
        self._integer('iid_repeats', 0)
        self._integer('ground_truth_draws', 1)
        self._integer('empirical', 0)
        functions = parse_name_list(self.settings.get('functions') or '')
        if not functions:
            self.errors.append(('functions', "'functions' must name at least one function"))

    def _validate_posterior(self):
        self._integer('keep', 1)
        self._integer('thin', 1)
        self._integer('burn_in', 0)
        self._integer('subset_repeats', 1)
        self._integer('reference_keep', 0)
        self._integer('n_train', 1)
        self._positive('prior_var')
        self._positive('proposal_scale', allow_none=True, allow_zero=True)
