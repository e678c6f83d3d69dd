"""Exception hierarchy shared by every module."""


class HumorError(Exception):
    """Base class for all package errors."""


class DataError(HumorError):
    """Bad input data or files; the CLI maps these to exit code 2."""


class NumericError(HumorError):
    """Numerical failure; the CLI maps these to exit code 3."""


class MalformedEdit(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, side=None):
        self.row = row
        self.side = side
        where = []
        if row is not None:
            where.append(f"row {row}")
        if side is not None:
            where.append(f"side {side}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingColumn(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class FormatError(DataError):
    pass


class DimMismatch(DataError):
    pass


class CorruptFile(DataError):
    pass


class VersionMismatch(DataError):
    pass


class ShapeMismatch(HumorError, ValueError):
    pass


class DegenerateBatch(HumorError, ValueError):
    pass


class EmptyBatch(HumorError, ValueError):
    pass


class EmptyInput(HumorError, ValueError):
    pass


class NoLabeledPairs(DataError):
    pass


class NonFiniteLoss(NumericError):
    def __init__(self, epoch, step, value):
        self.epoch = epoch
        self.step = step
        self.value = value
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, step {step}")
