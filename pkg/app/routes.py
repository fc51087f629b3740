from flask import Blueprint, jsonify, request, current_app
from .cli import run
from .decorators import lab_endpoint
from .errors import InputFormatError
from .models import BUILTIN_FUNCTIONS, COMMANDS, RunConfig

main_bp = Blueprint('main', __name__)


@main_bp.route('/health')
def health():
    """Simple health check route."""
    return jsonify({
        'message': 'ok',
        'commands': list(COMMANDS),
        'schema_version': current_app.config.get('REPORT_SCHEMA_VERSION'),
    })


@main_bp.route('/lab/<command>', methods=['POST'])
@lab_endpoint
def run_command(command):
    """Runs a lab command from a JSON body of run parameters and returns its report."""
    body = request.get_json(silent=True)
    if body is None:
        if request.data:
            raise InputFormatError('Request body is not valid JSON')
        body = {}
    if not isinstance(body, dict):
        raise InputFormatError('Request body must be a JSON object')
    # Files are read on the server only through the CLI
    for key in ('input', 'out'):
        if body.get(key) is not None:
            raise InputFormatError(f"'{key}' is not accepted over HTTP")
    if body.get('function') not in (None, *BUILTIN_FUNCTIONS):
        raise InputFormatError(f"'function' must be one of {list(BUILTIN_FUNCTIONS)} over HTTP")
    config = RunConfig.from_dict(command, body)
    config.fmt = 'json'
    current_app.logger.debug(f"API run {command} with {config.to_dict()}")
    return run(config)
