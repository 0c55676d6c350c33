"""Exception hierarchy shared by every crowdconf module"""

from typing import Optional


class CrowdConfError(Exception):
    """Base class for all crowdconf errors"""


class DomainError(CrowdConfError, ValueError):
    """An argument lies outside the domain of an operation"""


class ParseError(CrowdConfError):
    """A row of an input file could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicationError(CrowdConfError):
    """The same (task, worker) cell appears twice"""


class DegenerateInputError(CrowdConfError):
    """Restriction left nothing to estimate from"""


class ConsistencyError(CrowdConfError):
    """Two inputs describe different workers or tasks"""


class ConfigError(CrowdConfError):
    """A configuration file is missing or malformed"""


class UsageError(CrowdConfError):
    """Conflicting or invalid command-line flags"""
