"""Exception hierarchy shared by all modules."""


class LapEmbedError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class GeometryError(LapEmbedError, ValueError):
    pass


class ParseError(GeometryError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class DisconnectedError(GeometryError):
    def __init__(self, component_sizes):
        self.component_sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(
            f"geometry is disconnected: {len(self.component_sizes)} components "
            f"of sizes {self.component_sizes}"
        )


class DuplicatePointError(GeometryError):
    def __init__(self, pairs):
        self.pairs = [tuple(int(i) for i in p) for p in pairs]
        shown = self.pairs[:10]
        more = "" if len(self.pairs) <= 10 else f" (+{len(self.pairs) - 10} more)"
        super().__init__(f"duplicate points at index pairs {shown}{more}")


class UnreachableError(GeometryError):
    pass


class AssemblyError(LapEmbedError):
    pass


class ConvergenceError(LapEmbedError):
    """Eigensolver hit its iteration cap; ``residuals`` holds the best values seen."""

    def __init__(self, message, residuals=None, eigenvalues=None):
        self.residuals = residuals
        self.eigenvalues = eigenvalues
        super().__init__(message)


class AlignmentError(LapEmbedError):
    pass
