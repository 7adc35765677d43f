"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """Invalid shapes, counts or settings. ``field`` names the offending setting when known."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class UndefinedSimilarity(ArithmeticError):
    """Cosine similarity requested for a zero-norm vector."""


class UndefinedGeometry(ArithmeticError):
    """Orthogonal-distance geometry is degenerate (zero-length ray or d_o ~ 0)."""


class ClientSkip(RuntimeError):
    """A client cannot train this round (e.g. empty local dataset)."""


class ParseError(ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UndefinedEfficiency(ArithmeticError):
    """Efficiency requested with a zero resource total."""
