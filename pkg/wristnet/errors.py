class WristnetError(Exception):
    exit_code = 1


class ValidationError(WristnetError, ValueError):
    exit_code = 2


class DimensionError(ValidationError):
    pass


class EmptyBatchError(ValidationError):
    pass


class DegenerateLabelsError(ValidationError):
    pass


class UnsupportedRateError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class UndefinedMetricError(ValidationError):
    pass


class StateError(WristnetError, RuntimeError):
    pass


class NumericError(WristnetError, RuntimeError):
    pass


class IntegrityError(WristnetError, RuntimeError):
    pass


class FormatVersionError(WristnetError, RuntimeError):
    pass
