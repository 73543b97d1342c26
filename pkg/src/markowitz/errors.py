"""Exception hierarchy.

Every error raised by the library derives from :class:`MarkowitzError`, which
is itself a ``ValueError`` so callers that only care about bad input can catch
that.
"""

from __future__ import annotations


class MarkowitzError(ValueError):
    pass


class ValidationError(MarkowitzError):
    """Market data violates the definition of a Markowitz market."""


class NotSymmetric(ValidationError):
    pass


class NotPositiveSemidefinite(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class DimensionMismatch(MarkowitzError):
    pass


class SingularTransform(MarkowitzError):
    pass


class DegenerateMarket(MarkowitzError):
    """The operation needs a market with more structure than this one has."""


class ArbitrageMarket(DegenerateMarket):
    """The market admits a costless, riskless portfolio with positive payoff."""


class IllConditioned(MarkowitzError):
    pass


class InfeasibleTarget(MarkowitzError):
    pass


class ZeroCostMarket(DegenerateMarket):
    pass


class ZeroG(MarkowitzError):
    pass


class GNotPositive(MarkowitzError):
    pass


class ZeroCostPortfolio(MarkowitzError):
    pass


class UnsupportedCostClass(MarkowitzError):
    pass


class ParseError(MarkowitzError):
    pass


class InsufficientData(MarkowitzError):
    pass
