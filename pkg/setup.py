"""Build script: compiles the optional row-reduction kernel.

The package works without the extension (a pure-Python backend is selected
at import time); compilation failures therefore only cost speed.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/pseudodeform/_fpkernel.pyx"],
        language_level=3,
    )
except Exception as exc:  # Cython missing or no C compiler
    import sys

    print(f"pseudodeform: skipping compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
