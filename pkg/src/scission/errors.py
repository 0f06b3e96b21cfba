"""Exception types shared across the planner."""


class ScissionError(Exception):
    """Base class for all planner errors."""


class GraphError(ScissionError):
    """Invalid graph document or graph structure."""


class ProfileError(ScissionError):
    """Invalid benchmark profile or schema misalignment."""


class TopologyError(ScissionError):
    """Invalid topology document, preset, or missing link."""


class SearchError(ScissionError):
    """Configuration enumeration, evaluation or ranking failure."""


class QueryError(ScissionError):
    """Query syntax or semantic error.

    ``position`` is a 0-based character offset into the query text, when
    the error can be pinned to one.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
