# app/errors.py
"""Exception hierarchy shared by the library modules, the CLI and the API."""

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2


class LabError(Exception):
    """Base class for every error raised by the lab."""
    exit_code = EXIT_INPUT_ERROR
    status_code = 400
    kind = 'lab_error'

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        report = {'error': self.kind, 'message': self.message}
        if self.details:
            report['details'] = self.details
        return report


class DimensionError(LabError):
    kind = 'dimension_error'


class ParameterError(LabError):
    kind = 'parameter_error'


class InputFormatError(LabError):
    """Raised when an input file cannot be parsed."""
    kind = 'input_format_error'


class MetricError(LabError):
    """A distance matrix failed validation where a metric was required."""
    kind = 'metric_error'


class PreconditionError(LabError):
    """An operation's precondition does not hold; names the violating pair when there is one."""
    kind = 'precondition_error'

    def __init__(self, message, pair=None, **details):
        if pair is not None:
            details['pair'] = [int(pair[0]), int(pair[1])]
        super().__init__(message, **details)
        self.pair = pair


class InfeasibleError(LabError):
    kind = 'infeasible'
    exit_code = EXIT_CHECK_FAILED
    status_code = 422


class OracleContractError(LabError):
    """A density oracle returned something that breaks its guarantees."""
    kind = 'oracle_contract'
    exit_code = EXIT_CHECK_FAILED
    status_code = 422

    def __init__(self, message, call=None, **details):
        if call is not None:
            details['call'] = call
        super().__init__(message, **details)
        self.call = call


class InvariantError(LabError):
    kind = 'invariant_failure'
    exit_code = EXIT_CHECK_FAILED
    status_code = 422
