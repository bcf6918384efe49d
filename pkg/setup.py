"""Build script: compiles the optional _speedups extension.

The package works without the extension (a pure-Python twin of the kernels
is selected at import time), so the extension build is marked optional and
any compile failure degrades to the pure install.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "codrive._speedups",
                ["src/codrive/_speedups.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
