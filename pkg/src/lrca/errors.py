"""Exception hierarchy.

NumericalError marks failures of the mathematics (CLI exit 2); InputError
marks bad arguments or data (CLI exit 1).
"""
from __future__ import annotations


class LrcaError(Exception):
    pass


class NumericalError(LrcaError):
    pass


class InputError(LrcaError, ValueError):
    pass


# numeric_core
class NotPositiveDefinite(NumericalError):
    pass


class DimensionMismatch(InputError):
    pass


class InvalidProbability(InputError):
    pass


class NegativeStatistic(InputError):
    pass


class NonFiniteEvaluation(NumericalError):
    pass


class AsymmetricMatrix(NumericalError):
    pass


# inference
class RankDeficientJacobian(NumericalError):
    pass


class SampleSizeMismatch(InputError):
    pass


class RestrictionViolated(InputError):
    pass


class CenterRejected(NumericalError):
    pass


class NoBracket(NumericalError):
    pass


class NonPositiveSE(InputError):
    pass


class IdentityViolation(NumericalError):
    pass


# optimize
class UnsupportedRestriction(InputError):
    pass


# models
class NonStationary(InputError):
    pass


class NonPositiveVariance(NumericalError):
    pass


class SingularDesign(NumericalError):
    pass


class NonPositiveShape(InputError):
    pass


class NonPositiveTime(InputError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class NonPositiveIdiosyncraticVariance(InputError):
    pass


class UnbalancedPanel(InputError):
    pass


class DataFormatError(InputError):
    pass


# montecarlo / cli
class ConfigInvalid(InputError):
    pass


class UnknownModel(InputError):
    pass


class UsageError(InputError):
    pass


class NotConverged(NumericalError):
    pass
