class ShapeError(ValueError):
    pass


class StateError(RuntimeError):
    pass


class FormatError(ValueError):
    pass


class TruncatedFileError(FormatError):
    pass


class UnsupportedKindError(ValueError):
    pass


class DataError(FileNotFoundError):
    pass
