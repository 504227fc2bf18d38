"""Exception types shared across the package."""


class ContractError(Exception):
    """Base class for every contract/domain error raised by this package."""


class DuplicateElement(ContractError):
    pass


class UnknownElement(ContractError):
    pass


class CycleDetected(ContractError):
    pass


class DomainTooLarge(ContractError):
    def __init__(self, count, cap, what="ideal"):
        super().__init__(f"{what} count reaches {count}, exceeding the cap of {cap}")
        self.count = count
        self.cap = cap


class NotAnIdeal(ContractError):
    pass


class PosetMismatch(ContractError):
    pass


class TableIncomplete(ContractError):
    pass


class ValueNotSubset(ContractError):
    pass


class ValueNotIdeal(ContractError):
    pass


class QuotaOnNontrivialPoset(ContractError):
    pass


class PlottFailed(ContractError):
    """A choice function failed exhaustive axiom validation."""

    def __init__(self, report, message=None):
        super().__init__(message or f"choice function violates the choice axioms: {report.summary()}")
        self.report = report


class NotAPartition(ContractError):
    pass


class OrderCrossesParts(ContractError):
    pass


class UncheckedChoiceFunction(ContractError):
    pass


class NotAmple(ContractError):
    """A seed system is not closed under the descending dynamics."""

    def __init__(self, system, image):
        overflow = ", ".join(n for n in image.names if n not in system)
        super().__init__(
            f"system {system} is not ample: the next descending step {image} "
            f"adds {{{overflow}}}"
        )
        self.system = system
        self.image = image


class NotStable(ContractError):
    pass


class EmptyFamily(ContractError):
    pass


class PreconditionFailed(ContractError):
    pass


class MalformedPreferences(ContractError):
    pass


class InternalInvariant(ContractError):
    """A mathematically guaranteed invariant failed; usually means a
    non-validated choice function slipped into a solver."""


class ParseError(ContractError):
    """An instance document is malformed; `path` points into the document."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
