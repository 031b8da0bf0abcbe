"""Batch front end: problem files in, verdict reports out."""

from .loader import LoadedFile, SemanticError, load
from .runner import Report, TaskResult, emit, run
from .syntax import ParseError, ProblemFile, parse, print_file

__all__ = ["LoadedFile", "ParseError", "ProblemFile", "Report", "SemanticError", "TaskResult",
           "emit", "load", "parse", "print_file", "run"]
