"""Exception hierarchy shared across the package.

Each class carries the process exit code the command line front end maps
it to, so library code raises these directly and the CLI only translates.
"""


class ToolError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class StageError(ToolError):
    """A pipeline stage was invoked before the stage that feeds it."""

    exit_code = 2


class TransportError(ToolError):
    """HTTP request failed after retries, or network use was forbidden."""

    exit_code = 3


class ParseError(ToolError):
    """Malformed input: a response body, a Pajek file, a CSV matrix."""

    exit_code = 4

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}: " if line is None else f"{source}:{line}: "
        super().__init__(prefix + message)


class DomainError(ToolError):
    """Input is well-formed but outside an operation's domain."""

    exit_code = 5


class InvalidNodeError(DomainError):
    """A node id or label does not belong to the network at hand."""
