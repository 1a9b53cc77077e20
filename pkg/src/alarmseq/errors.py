"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line entry point:
2 for configuration problems, 3 for data/parse problems, 4 for numeric failures.
"""


class AlarmSeqError(Exception):
    exit_code = 1


class ConfigError(AlarmSeqError, ValueError):
    exit_code = 2


class DataError(AlarmSeqError, ValueError):
    exit_code = 3


class NumericError(AlarmSeqError, ArithmeticError):
    exit_code = 4


class MalformedVariableError(DataError):
    pass


class LabelError(DataError):
    pass


class SplitError(ConfigError):
    pass


class TraceError(DataError):
    pass


class GenerationError(ConfigError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderError(DataError):
    pass


class InsufficientAlarmsError(DataError):
    def __init__(self, occurrence_ids, k):
        ids = ", ".join(occurrence_ids)
        super().__init__(f"fewer than k={k} alarms in occurrence(s): {ids}")
        self.occurrence_ids = list(occurrence_ids)


class VocabError(DataError):
    pass


class OovError(DataError):
    def __init__(self, token):
        super().__init__(f"out-of-vocabulary token: {token}")
        self.token = token


class ShapeError(DataError):
    pass


class LoadError(DataError):
    pass
