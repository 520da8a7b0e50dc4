# kherd/cli.py
"""
Shared plumbing of the experiment commands.

Every command gets --config, --out and --seed, resolves its settings
(flags over config file over defaults), validates them, runs, and writes
manifest.json into the output directory even when it fails. The exception
taxonomy decides the exit code.
"""

import inspect
import logging
import time
from pathlib import Path
from typing import Callable, Optional

import click
from flask import current_app

from kherd import __version__
from kherd.config import experiment_defaults, load_config_file, resolve_settings
from kherd.constants import ArtifactName, ExitCode, LogMessage
from kherd.error_handlers import configuration_error, numerical_error, unexpected_error
from kherd.exceptions import ConfigurationError, NumericalError
from kherd.models.manifest import RunManifest
from kherd.utils.artifacts import write_json
from kherd.utils.validators import SettingsValidator

logger = logging.getLogger(__name__)

Handler = Callable[[dict, Path, RunManifest], None]


def experiment_command(group: click.Group, name: str, help: Optional[str] = None):
    """
    Register handler(settings, out_dir, manifest) as command `name` on a click group.

    Click options stacked on the handler become the command's flags; their
    parameter names must be settings keys. Unset flags arrive as None and do
    not override the config file.
    """
    def decorator(handler: Handler) -> Handler:
        def callback(config_file, out, seed, **flags):
            flags.update(out=out, seed=seed)
            code = run_command(name, handler, config_file, flags)
            click.get_current_context().exit(code)

        callback.__name__ = handler.__name__
        callback.__click_params__ = list(getattr(handler, '__click_params__', []))
        callback = click.option('--seed', type=int, help='Run seed')(callback)
        callback = click.option('--out', help='Output directory')(callback)
        callback = click.option('--config', 'config_file',
                                help='JSON file whose keys mirror the flag names')(callback)
        group.command(name, help=help or inspect.getdoc(handler))(callback)
        return handler
    return decorator


def _describe(error: BaseException) -> str:
    return f"{type(error).__name__}: {error}"


def run_command(name: str, handler: Handler, config_file: Optional[str], flags: dict) -> int:
    """
    Resolve settings, run the handler and write manifest.json, also on failure.

    Returns:
        int: process exit code
    """
    app_config = current_app.config
    out_dir = Path(flags.get('out') or app_config['OUTPUT_DIR'])
    seed = flags['seed'] if flags.get('seed') is not None else app_config['DEFAULT_SEED']
    manifest = RunManifest(command=name, config={k: v for k, v in flags.items() if v is not None},
                           seed=seed, version=__version__)
    start = time.perf_counter()
    code = ExitCode.OK
    try:
        settings = resolve_settings(experiment_defaults(app_config), load_config_file(config_file), flags)
        out_dir = Path(settings['out'])
        manifest.config = settings
        manifest.seed = settings['seed']
        SettingsValidator(settings, name).raise_for_errors()

        logger.info(LogMessage.COMMAND_START.format(command=name, seed=settings['seed']))
        out_dir.mkdir(parents=True, exist_ok=True)
        handler(settings, out_dir, manifest)
    except ConfigurationError as e:
        manifest.error = _describe(e)
        code = configuration_error(e)
    except NumericalError as e:
        manifest.error = _describe(e)
        code = numerical_error(e)
    except Exception as e:
        manifest.error = _describe(e)
        code = unexpected_error(e)
    finally:
        manifest.duration = time.perf_counter() - start

    try:
        write_json(out_dir / ArtifactName.RUN_MANIFEST, manifest.to_dict())
    except OSError as e:
        logger.error(f"Could not write manifest to {out_dir}: {e}")
        click.echo(f"error: could not write manifest: {e}", err=True)

    if code == ExitCode.OK:
        logger.info(LogMessage.COMMAND_DONE.format(command=name, duration=manifest.duration))
    return code
