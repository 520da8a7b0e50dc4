from flask import Flask

__version__ = '1.0.0'


def create_app(config_class=None):
    """Create and configure the Flask application that carries the experiment commands."""

    # Create Flask instance
    app = Flask(__name__)

    # Load configuration
    if config_class is None:
        # Get configuration based on environment
        from kherd.config import get_config
        config_class = get_config()

    if isinstance(config_class, type):
        # It's a class, instantiate it
        app.config.from_object(config_class())
    else:
        # It's already an instance
        app.config.from_object(config_class)

    # Configure logging
    from kherd.logging_config import configure_logging
    configure_logging(app)

    # Register command blueprints
    from kherd.commands import gm_herd, empirical_herd, compare, posterior
    app.register_blueprint(gm_herd.bp)
    app.register_blueprint(empirical_herd.bp)
    app.register_blueprint(compare.bp)
    app.register_blueprint(posterior.bp)

    app.logger.debug(f"Registered commands: {', '.join(sorted(app.cli.commands))}")
    return app
