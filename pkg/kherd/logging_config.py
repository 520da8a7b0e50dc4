# kherd/logging_config.py
import os
import logging
from logging.handlers import RotatingFileHandler
import time

from kherd.constants import LogMessage

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(app):
    """Configure logging for the application."""

    # app.logger is the 'kherd' logger every module logs under
    if app.debug:
        # In development, log to console with more details
        logging.basicConfig(level=logging.DEBUG, format=LOG_FORMAT)
        app.logger.setLevel(logging.DEBUG)
    elif app.testing:
        app.logger.setLevel(getattr(logging, app.config['LOG_LEVEL'], logging.WARNING))
    else:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

        # In production, also log to file with rotation
        log_dir = app.config['LOG_DIR']
        os.makedirs(log_dir, exist_ok=True)
        timestamp = time.strftime('%Y%m%d')
        log_file = os.path.join(log_dir, f'kherd_{timestamp}.log')

        # 10MB max size, keep 10 backups
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10485760,
            backupCount=10
        )
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s '
            '[in %(pathname)s:%(lineno)d]'
        ))

        if not any(isinstance(h, RotatingFileHandler) for h in app.logger.handlers):
            app.logger.addHandler(file_handler)
        app.logger.setLevel(getattr(logging, app.config['LOG_LEVEL'], logging.INFO))

    app.logger.info(LogMessage.APP_STARTUP.format(env=app.config['ENV']))
