"""A reference implementation of a linear lambda calculus with borrowing.

The package provides a parser and type checker for the surface language, two
operational semantics (a mutative machine with a global memory and a
memory-free semantics that restores borrowed values from recorded histories),
and a test harness for exploring reduction nondeterminism.
"""

__version__ = "0.1.0"
