"""Shared error taxonomy.

Every user-facing failure carries one of five codes; the HTTP layer maps
codes to statuses (notFound 404, duplicate 409, permission 403,
validation 422, consensusTimeout 504).
"""

HTTP_STATUS = {
    "notFound": 404,
    "duplicate": 409,
    "permission": 403,
    "validation": 422,
    "consensusTimeout": 504,
}


class GanttChainError(Exception):
    """Base error; `code` selects the wire-level category."""

    code = "validation"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    @property
    def http_status(self) -> int:
        return HTTP_STATUS[self.code]


class NotFoundError(GanttChainError):
    code = "notFound"


class DuplicateError(GanttChainError):
    code = "duplicate"


class PermissionDenied(GanttChainError):
    code = "permission"


class ValidationError(GanttChainError):
    code = "validation"


class ConsensusTimeout(GanttChainError):
    code = "consensusTimeout"


class ContractError(GanttChainError):
    """Raised by contract functions during simulated execution.

    The concrete code depends on the failure (already-exists -> duplicate,
    missing record -> notFound, bad payload -> validation).
    """

    def __init__(self, code: str, message: str):
        if code not in HTTP_STATUS:
            raise ValueError(f"unknown error code {code!r}")
        super().__init__(message)
        self.code = code
