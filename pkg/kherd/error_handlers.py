# kherd/error_handlers.py
import logging
import traceback

import click

from kherd.constants import ExitCode, LogMessage

# Configure logger for application errors
logger = logging.getLogger(__name__)


def configuration_error(e):
    """Bad flags, config files or input data: the message names the field or row."""
    field = getattr(e, 'field', None)
    row = getattr(e, 'row', None)
    prefix = f"{field}: " if field else ''
    logger.error(f"Configuration error: {prefix}{e}")
    click.echo(f"error: {prefix}{e}", err=True)
    if row is not None:
        logger.debug(f"Offending row: {row}")
    return ExitCode.CONFIG_ERROR


def numerical_error(e):
    logger.error(f"Numerical failure: {type(e).__name__}: {e}")
    click.echo(f"error: numerical failure: {e}", err=True)
    return ExitCode.NUMERIC_ERROR


def unexpected_error(e):
    # Log unhandled exceptions
    error_traceback = traceback.format_exc()
    logger.critical(LogMessage.ERROR_UNHANDLED.format(error=str(e), traceback=error_traceback))
    click.echo(f"error: {e}", err=True)
    return ExitCode.UNEXPECTED
