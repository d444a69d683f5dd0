"""Exception hierarchy. Every error raised by the toolkit derives from PortfolioError."""


class PortfolioError(Exception):
    pass


# ingestion
class MissingFile(PortfolioError, FileNotFoundError):
    pass


class MalformedRow(PortfolioError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateKey(PortfolioError, ValueError):
    pass


class DuplicateTaskId(DuplicateKey):
    pass


class RangeViolation(PortfolioError, ValueError):
    pass


# matrix construction
class UnknownId(PortfolioError, KeyError):
    pass


class EmptyColumn(PortfolioError, ValueError):
    def __init__(self, task_id: str):
        super().__init__(f"no successful evaluation for task {task_id!r}")
        self.task_id = task_id


class MissingEvaluation(PortfolioError, ValueError):
    pass


class EmptyInput(PortfolioError, ValueError):
    pass


class CoverageGap(PortfolioError, ValueError):
    def __init__(self, task_id: str):
        super().__init__(f"explicit baseline has no value for task {task_id!r}")
        self.task_id = task_id


class DimensionMismatch(PortfolioError, ValueError):
    pass


# mining
class IndexOutOfRange(PortfolioError, IndexError):
    pass


class EmptyPortfolio(PortfolioError, ValueError):
    pass


class EmptyMatrix(PortfolioError, ValueError):
    pass


class SizeTooLarge(PortfolioError, ValueError):
    pass


# decision model
class EmptyTable(PortfolioError, ValueError):
    pass


class EmptyModel(PortfolioError, ValueError):
    pass


class VersionMismatch(PortfolioError, ValueError):
    pass


class SchemaViolation(PortfolioError, ValueError):
    pass


# evaluation harness
class EmptyList(PortfolioError, ValueError):
    pass


class TooFewTasks(PortfolioError, ValueError):
    pass


class UnknownTaskId(UnknownId):
    pass


class TooFewAnchors(PortfolioError, ValueError):
    pass


class InvalidShape(PortfolioError, ValueError):
    pass
