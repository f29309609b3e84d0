"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Inputs violate a documented precondition (shapes, ranges, options)."""


class PanelParseError(InvalidInputError):
    """A panel CSV file could not be turned into a rectangular dataset."""


class InvalidModelError(ValueError):
    """Parameters assign zero likelihood to the data (every group at -inf)."""


class FitError(RuntimeError):
    """Every EM restart failed."""
