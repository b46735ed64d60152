"""Exception types shared across the engines."""


class DynIsoError(Exception):
    """Base class for all library errors."""


class ParameterError(DynIsoError):
    """A parameter is outside its configured cap or otherwise malformed."""


class NonInvertibleError(DynIsoError):
    """A residue or truncated series has no inverse."""


class BudgetExhaustedError(DynIsoError):
    """No prime (or similar resource) found within the given budget."""


class BatchTooLargeError(DynIsoError):
    """A change batch exceeds the configured width cap."""


class SingularUpdateError(DynIsoError):
    """A low-rank update would make the maintained matrix singular."""


class OracleScaleError(DynIsoError):
    """An exhaustive oracle was asked about an instance above its cap."""


class SearchFailureError(DynIsoError):
    """A randomized search exhausted its attempt limit."""


class MagnitudeError(DynIsoError):
    """A combined weight would overflow its field or a machine word."""


class FamilyFailureError(DynIsoError):
    """No candidate in a weight family passed verification."""


class IsolationFailureError(DynIsoError):
    """A witness extraction produced an inconsistent result."""


class ScenarioError(DynIsoError):
    """A scenario file failed to parse; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
