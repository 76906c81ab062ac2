"""Exception hierarchy shared by all analysis modules.

Every error carries the name of the module that raised it so the CLI can
report where a pipeline stage failed.
"""


class AnalysisError(Exception):
    module = "twocontract"


class DomainError(AnalysisError, ValueError):
    module = "compound"


class ConstructionError(AnalysisError, ValueError):
    module = "systems"


class FieldEvaluationError(AnalysisError, ArithmeticError):
    module = "systems"


class CurveError(AnalysisError, ValueError):
    module = "poincare"


class CurveThroughEquilibriumError(CurveError):
    pass


class IndexAmbiguityError(CurveError):
    pass


class IndexInconsistencyError(CurveError):
    pass


class ClassificationError(AnalysisError):
    module = "equilibria"


class ConfigurationError(AnalysisError, ValueError):
    module = "regions"


class IntegrationError(AnalysisError, ArithmeticError):
    module = "simulate"


class StepSizeError(IntegrationError):
    pass


class EmptyDomainError(AnalysisError, ValueError):
    module = "simulate"


class DegenerateAreaError(AnalysisError, ValueError):
    module = "simulate"
