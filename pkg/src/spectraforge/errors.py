"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two spectral objects live on different wavelength grids."""

    def __init__(self, a, b, what="grids"):
        super().__init__(f"{what} differ: {a} vs {b}")
        self.a = a
        self.b = b


class FormatError(ValueError):
    """A file on disk does not follow the expected layout."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class NumericalFailure(RuntimeError):
    """A computation could not produce a meaningful number."""


class NoExplanatorySpectrum(NumericalFailure):
    """Every prior spectrum has zero posterior mass for an observation."""

    def __init__(self, message="no explanatory spectrum: all posterior mass is zero; "
                               "check that the noise parameters match the data"):
        super().__init__(message)
