"""Exception hierarchy shared by every module."""


class SwiptError(Exception):
    """Base class for all package errors."""


class ScenarioError(SwiptError, ValueError):
    """Invalid scenario, allocation or demand."""


class ZeroConsumption(SwiptError, ZeroDivisionError):
    """Total consumed energy is zero, so the baseline efficiency is undefined."""


class DenominatorNonpositive(SwiptError):
    """Net consumption (consumption minus deducted energy) is not positive."""


class DomainError(SwiptError, ValueError):
    """Argument outside the principal-branch domain of the Lambert W function."""


class ConstraintForcedActive(SwiptError):
    """The unconstrained stationary point does not exist (Gamma < -1)."""


class NoRoot(SwiptError):
    """A threshold equation shows no sign change on its bracket."""


class Infeasible(SwiptError):
    """Harvested-energy demand exceeds what both users can deliver."""

    def __init__(self, message, chi=None, chi_max=None):
        super().__init__(message)
        self.chi = chi
        self.chi_max = chi_max


class InfeasibleEverywhere(Infeasible):
    """No lattice point of the oracle search satisfies the harvest constraint."""
