"""Exception hierarchy shared by all ordersup modules.

Every error the library raises on bad *data* derives from :class:`DataError`,
which lets the command line map them onto a single exit code.
"""


class DataError(ValueError):
    """Base class for errors caused by malformed or inconsistent inputs."""


class LengthMismatch(DataError):
    pass


class NotABijection(DataError):
    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class InvalidLehmerCode(DataError):
    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class InvalidHammingEmbedding(DataError):
    pass


class SetSizeTooLarge(DataError):
    pass


class StepCountMismatch(DataError):
    def __init__(self, message, recipe_id=None):
        super().__init__(message)
        self.recipe_id = recipe_id


class ParseError(DataError):
    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class LabelOutOfRange(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class NonFiniteLoss(DataError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class KeyMismatch(DataError):
    pass
