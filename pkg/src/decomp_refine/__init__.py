"""Refinement of decompiler pseudo-code into re-executable C.

The pipeline generates a short header-comment rationale for a function,
produces one rationale-guided and one plain candidate, recompiles both and
keeps the one whose assembly is closest to the original binary.
"""

__version__ = "0.1.0"
