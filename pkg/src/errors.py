"""Root exception for the model-risk engine.

Each package defines its own subclasses next to the code that raises them;
the CLI maps them onto exit codes.
"""


class MriskError(Exception):
    """Base exception for all engine errors."""
    pass
