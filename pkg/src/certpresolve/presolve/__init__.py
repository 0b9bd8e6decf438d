"""Certifying presolve techniques, driver and postsolve."""
from .driver import ConfigError, PresolveConfig, PresolveResult, run
from .postsolve import Fixed, RowDeleted, Substituted, postsolve
from .techniques import DEFAULT_ORDER, TECHNIQUES

__all__ = [
    "ConfigError", "PresolveConfig", "PresolveResult", "run",
    "Fixed", "RowDeleted", "Substituted", "postsolve",
    "DEFAULT_ORDER", "TECHNIQUES",
]
