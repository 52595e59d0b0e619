"""Build script: compiles the optional Cython kernel.

The package is fully functional without the extension (a numpy fallback
is selected at import time), so a failed compile is downgraded to a
warning rather than aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "dosepref._kernels._cykernel",
                ["src/dosepref/_kernels/_cykernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    warnings.warn(f"Cython kernel not built ({exc}); using pure-python fallback")

setup(ext_modules=ext_modules)
