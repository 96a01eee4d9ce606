"""Build script.

The package is pure Python; a small Cython extension accelerates the
monomial kernel when a compiler is available.  The extension is optional:
if it cannot be built the install still succeeds and the package falls
back to the pure-Python kernel at import time.
"""

from setuptools import setup, Extension

ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension("ndga._kernel", ["src/ndga/_kernel.pyx"])
    ext.optional = True
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    pass

setup(ext_modules=ext_modules)
