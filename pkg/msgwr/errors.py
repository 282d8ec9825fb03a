"""
Exception classes for msgwr
"""


class MSGWRError(Exception):
    pass


class InputError(MSGWRError):
    """
    Invalid input data.
    """
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ParameterError(MSGWRError, ValueError):
    """
    Parameter outside its permissible range.
    """


class CalibrationError(MSGWRError):
    pass


class SingularityError(CalibrationError):
    """
    Local normal equations singular beyond tolerance.
    """
    def __init__(self, message, point_index=None):
        super().__init__(message)
        self.point_index = point_index


class InfeasibleCandidateError(CalibrationError):
    """
    Criterion undefined for a candidate (bandwidth, alpha).
    """


class NumericError(MSGWRError, ArithmeticError):
    pass


class ConvergenceWarning(UserWarning):
    pass
