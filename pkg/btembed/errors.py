"""Exceptions raised by btembed.

Two families. `CapabilityError` means the input asks for something outside what
the library supports (the CLI maps these to exit code 2). `ContractError` means
the caller handed over data that does not fit together.
"""


class BtembedError(Exception):
    pass


class CapabilityError(BtembedError):
    pass


class ContractError(BtembedError):
    pass


class UnsupportedResidueChar(CapabilityError):
    pass


class DegenerateExtension(CapabilityError):
    pass


class UnsupportedTowerDepth(CapabilityError):
    pass


class AnisotropicTooLarge(CapabilityError):
    pass


class IsotropySearchFailed(CapabilityError):
    """A form decided isotropic over Q yielded no rational isotropic vector."""


class NotSplitOverQ(CapabilityError):
    """The form has a larger Witt index over Q_p than over Q, so no rational Witt basis exists."""


class UnsupportedFactorDegree(CapabilityError):
    pass


class UnsupportedDimension(CapabilityError):
    pass


class H1Violated(CapabilityError):
    """The minimal polynomial of beta is not squarefree."""


class NotInLieAlgebra(CapabilityError):
    """beta + beta^sigma is not zero."""


class NotEpsilonHermitian(CapabilityError):
    pass


class ScenarioParseError(CapabilityError):
    pass


class DimensionMismatch(ContractError):
    pass


class RankDeficient(ContractError):
    pass


class ParameterOutOfRange(ContractError):
    pass


class BlockMismatch(ContractError):
    pass


class NotSigmaFixed(ContractError):
    pass


class NotShiftRelated(ContractError):
    pass


class DegenerateRestriction(ContractError):
    pass
