"""Build script: compiles the optional DBM closure extension.

The package is fully functional without the extension; minicpa.kernels
falls back to the pure-Python closure at import time.  Set
MINICPA_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MINICPA_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "minicpa.kernels._closure_cy",
                    ["src/minicpa/kernels/_closure_cy.pyx"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
