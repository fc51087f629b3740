# app/__init__.py
import os
from flask import Flask, current_app, has_app_context
from flask_cors import CORS
from config import config_by_name, CurrentConfig


# --- Settings Helper ---
def get_setting(name, override=None):
    """Returns `override` when given, else the named knob from the active config.

    Inside an application context the Flask config wins, so tests and the API can
    swap configurations; plain library use falls back to `CurrentConfig`.
    """
    if override is not None:
        return override
    if has_app_context():
        if name in current_app.config:
            return current_app.config[name]
    return getattr(CurrentConfig, name)


def create_app(config_name=None):
    """Application Factory Function"""
    if config_name is None:
        config_name = os.getenv('FLASK_ENV', 'default')

    app = Flask(__name__)
    app.config.from_object(config_by_name[config_name])

    # app.logger is the "app" logger, so library modules (app.*) propagate to it
    app.logger.setLevel(app.config.get('LOG_LEVEL', 'INFO'))

    CORS(
        app,
        origins=app.config.get('CORS_ORIGINS', '*'),
        methods=["GET", "POST", "OPTIONS"],
        allow_headers=["Content-Type"]
    )

    with app.app_context():
        from .routes import main_bp
        from .cli import lab_cli

        app.register_blueprint(main_bp, url_prefix='/api')
        app.cli.add_command(lab_cli)

    app.logger.debug(f"Loaded config '{config_name}' -> {config_by_name[config_name].__name__}")
    return app
