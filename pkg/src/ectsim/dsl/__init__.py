"""Front end for the mini-CSP language (``.csp`` files)."""

from .checker import ARG0, OUT, load_program, validate
from .nodes import Program, Site, SourceLoc
from .parser import Diagnostic, DslError, parse
from .printer import pretty

__all__ = [
    "ARG0", "OUT", "Diagnostic", "DslError", "Program", "Site", "SourceLoc",
    "load_program", "parse", "pretty", "validate",
]
