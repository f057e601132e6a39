"""Exception hierarchy shared across the toolkit.

ValidationError subclasses signal bad inputs, configuration, or arguments
(CLI exit code 1). SimulationError subclasses signal a runtime failure
inside a numerical stage (exit code 2).
"""


class BankRiskError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BankRiskError):
    pass


class SimulationError(BankRiskError):
    pass


# --- panel ingestion ---------------------------------------------------------

class MissingColumn(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required column not mappable: {name!r}")


class ParseError(ValidationError):
    def __init__(self, row: int, column: str, value: str = ""):
        self.row = row
        self.column = column
        super().__init__(f"row {row}: cannot parse column {column!r} value {value!r}")


class DuplicateKey(ValidationError):
    def __init__(self, bank_id: str, year: int):
        self.bank_id = bank_id
        self.year = year
        super().__init__(f"duplicate (bank_id, year) = ({bank_id!r}, {year})")


class InvariantViolation(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class EmptySlice(ValidationError):
    pass


# --- metrics -----------------------------------------------------------------

class InvalidInput(ValidationError):
    pass


class DegenerateYear(ValidationError):
    pass


# --- network -----------------------------------------------------------------

class EmptySeries(ValidationError):
    pass


class AllZeroDistances(ValidationError):
    pass


class EmptyRoster(ValidationError):
    pass


class MissingAssets(ValidationError):
    def __init__(self, bank_id: str, year: int | None = None):
        self.bank_id = bank_id
        self.year = year
        where = f" in {year}" if year is not None else ""
        super().__init__(f"no total_assets for bank {bank_id!r}{where}")


# --- temporal model ----------------------------------------------------------

class ZeroDegreeNode(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonFiniteLoss(SimulationError):
    pass


class RosterMismatch(ValidationError):
    pass


class InsufficientBanks(ValidationError):
    pass


# --- simulation --------------------------------------------------------------

class MissingField(ValidationError):
    def __init__(self, bank_id: str, field: str):
        self.bank_id = bank_id
        self.field = field
        super().__init__(f"bank {bank_id!r} is missing mandatory field {field!r}")


class UnknownBank(ValidationError):
    pass


class MissingAnomalyReport(ValidationError):
    pass


# --- reporting ---------------------------------------------------------------

class MissingStageOutput(ValidationError):
    pass
