"""Build script for the optional compiled kernels.

The package works without the extension (a pure numpy fallback is selected
at import time), so the extension is marked optional: a missing compiler
degrades the install instead of failing it.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "svtrans._core._kernels",
                ["src/svtrans/_core/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
