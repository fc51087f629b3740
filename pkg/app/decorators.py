# app/decorators.py
from functools import wraps
from flask import jsonify, current_app
from .errors import LabError


def lab_endpoint(f):
    """
    Decorator for API handlers that run lab computations.
    Converts LabError into a JSON error response with the error's status code;
    a report whose checks failed is returned with 422.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            report = f(*args, **kwargs)
        except LabError as e:
            current_app.logger.warning(f"Lab request failed ({e.kind}): {e.message}")
            body = e.to_dict()
            body['message'] = e.message
            return jsonify(body), e.status_code
        except Exception as e:
            current_app.logger.error(f"Unexpected error in {f.__name__}: {e}")
            return jsonify({'message': 'Internal error while running the computation',
                            'error': 'internal'}), 500

        status = 200 if report.passed else 422
        return current_app.response_class(report.to_json(), status=status,
                                          mimetype='application/json')
    return decorated_function
