"""Exception hierarchy.

Every failure raised by the library derives from :class:`KdilError`.  Errors
that come out of a verification carry the residual that tripped them and,
where one exists, a witness (basis index, group element, axiom name).
"""

from __future__ import annotations

from typing import Any


class KdilError(Exception):
    """Base class; ``residual`` and ``witness`` are optional diagnostics."""

    def __init__(self, message: str, *, residual: float | None = None, witness: Any = None):
        super().__init__(message)
        self.residual = residual
        self.witness = witness


# numkit
class MalformedMatrix(KdilError):
    pass


class NotPositive(KdilError):
    pass


class NotQuotientCompatible(KdilError):
    pass


class Undominated(KdilError):
    pass


# algebra
class AlgebraMismatch(KdilError):
    pass


class NotAutomorphism(KdilError):
    def __init__(self, message: str, *, axiom: str, residual: float | None = None, witness: Any = None):
        super().__init__(message, residual=residual, witness=witness)
        self.axiom = axiom


class NotExpectation(KdilError):
    pass


# krein
class NotSymmetry(KdilError):
    pass


class NotRepresentation(KdilError):
    pass


class NotPseudoUnitary(KdilError):
    pass


class NotSimultaneous(KdilError):
    pass


# hmodule
class ModuleMismatch(KdilError):
    pass


class NotDynamicalSystem(KdilError):
    pass


# maps
class ConditionOneViolated(KdilError):
    pass


class ConditionTwoViolated(KdilError):
    pass


class NotPhiMap(KdilError):
    pass


class HypothesisViolated(KdilError):
    pass


class InternalInconsistency(KdilError):
    pass


class NoInstanceFound(KdilError):
    pass


# ksgns
class DimensionMismatch(KdilError):
    pass


class ResidualTooLarge(KdilError):
    pass


class VerificationFailed(KdilError):
    pass


# covariant
class NotGroup(KdilError):
    pass


class NotCovariant(KdilError):
    pass


class NotInvariant(KdilError):
    pass


class RepIntertwiningFailed(KdilError):
    pass


# crossed
class IdentityResidualTooLarge(KdilError):
    pass


# cli
class SchemaError(KdilError):
    pass


class DimensionError(KdilError):
    pass
