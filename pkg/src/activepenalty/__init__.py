"""Sharp-interface active penalty solvers on periodic grids."""

__version__ = "0.1.0"
