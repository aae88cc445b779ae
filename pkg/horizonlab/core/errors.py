"""Exception types and their CLI exit codes"""

from typing import Any, Dict, Optional


EXIT_OK = 0
EXIT_VERIFICATION = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class HorizonError(Exception):
    """Base error; carries the exit code reported by the CLI"""

    exit_code = EXIT_NUMERICAL
    error = "horizon_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_record(self) -> Dict[str, Any]:
        return {"error": self.error, "message": self.message, "details": self.details}


class InputError(HorizonError):
    """Malformed input or parameters outside their admissible range"""

    exit_code = EXIT_INPUT
    error = "input_error"


class NumericalError(HorizonError):
    """A solver, search or integrator did not deliver"""

    exit_code = EXIT_NUMERICAL
    error = "numerical_error"


class MembershipError(NumericalError):
    """A metric required to have positive stability eigenvalue does not"""

    error = "membership_error"
