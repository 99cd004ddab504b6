"""Exception hierarchy shared by all modules."""


class ModelError(ValueError):
    """Base class for invalid inputs to the model."""


class RangeError(ModelError):
    """A probability or count is outside its allowed range."""


class StochasticityError(ModelError):
    """A row of the transition matrix would sum to more than one."""


class ErgodicityError(ModelError):
    """The chain has no unique limiting distribution."""


class SingularityError(ModelError):
    """A closed form has a vanishing geometric-series denominator."""


class DegenerateError(ModelError):
    """Recovery and infection rates are both (effectively) zero."""


class DenominatorError(ModelError):
    """A sigma solver hit a zero denominator."""


class SpecError(ModelError):
    """Invalid popularity distribution specification."""


class EmptyPopulationError(ModelError):
    """A population has no positive weight."""
