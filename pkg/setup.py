"""Build script: compiles the optional Monte Carlo kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time); the build therefore tolerates a missing or failing C
toolchain instead of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "cloudcache._kernels",
                ["src/cloudcache/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"cloudcache: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
