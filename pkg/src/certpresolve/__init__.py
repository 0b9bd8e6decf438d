"""Certifying presolve for 0-1 integer linear programs."""
from .checker import Checker, check
from .estimator import CertifyingPresolver
from .model import Constraint, Objective, Problem
from .presolve import PresolveConfig, PresolveResult, run

__all__ = ["CertifyingPresolver", "Checker", "Constraint", "Objective", "PresolveConfig",
           "PresolveResult", "Problem", "check", "run"]
__version__ = "0.1.0"
