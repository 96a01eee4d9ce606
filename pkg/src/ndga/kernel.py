"""Kernel lane selection.

Imports the compiled monomial kernel when present, otherwise the
pure-Python twin.  Set ``NDGA_PURE_PYTHON=1`` to force the fallback
(used by the benchmark and the lane-agreement tests).
"""

import os

if os.environ.get("NDGA_PURE_PYTHON"):
    from ._kernel_py import monomial_grade, mul_monomials, partial_monomial

    COMPILED = False
else:
    try:
        from ._kernel import monomial_grade, mul_monomials, partial_monomial

        COMPILED = True
    except ImportError:
        from ._kernel_py import monomial_grade, mul_monomials, partial_monomial

        COMPILED = False

LANE = "compiled" if COMPILED else "pure-python"

__all__ = ["monomial_grade", "mul_monomials", "partial_monomial", "COMPILED", "LANE"]
