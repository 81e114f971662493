"""Exception types shared across the package."""


class C19RiskError(Exception):
    """Base class for all package errors."""


class MalformedCode(C19RiskError):
    """Input string cannot be a valid ICD-10-CM diagnosis code."""

    def __init__(self, raw: str, reason: str = ""):
        self.raw = raw
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(f"malformed diagnosis code {raw!r}{detail}")


class MalformedCatalogRow(C19RiskError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"catalog line {line}: {reason}")


class EmptyCatalog(C19RiskError):
    pass


class MissingHeader(C19RiskError):
    def __init__(self, expected, found=None):
        self.expected = list(expected)
        self.found = list(found) if found is not None else None
        super().__init__(f"missing or wrong header: expected {self.expected}, found {self.found}")


class DuplicateDemographics(C19RiskError):
    def __init__(self, person_id: str):
        self.person_id = person_id
        super().__init__(f"duplicate demographics row for person {person_id!r}")


class Infeasible(C19RiskError):
    """Resampling constraints cannot be satisfied with the available counts."""


class SchemaMismatch(C19RiskError):
    """Feature vector names/order differ from what the model expects."""


class DegenerateData(C19RiskError):
    """Training data contains a single class."""


class DegenerateLabels(C19RiskError):
    """Metric requires at least one positive and one negative label."""


class NonConvergence(C19RiskError):
    def __init__(self, max_iters: int, grad_norm: float):
        self.max_iters = max_iters
        self.grad_norm = grad_norm
        super().__init__(
            f"optimizer did not reach tolerance within {max_iters} iterations "
            f"(gradient norm {grad_norm:.3e})"
        )


class EmptyDistribution(C19RiskError):
    """Percentile map requires a non-empty training score distribution."""


class UnknownModelVersion(C19RiskError):
    def __init__(self, version):
        self.version = version
        super().__init__(f"unsupported model format version {version!r}")


class CorruptModel(C19RiskError):
    pass
