"""Build script for the optional compiled image-kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so the build is marked optional: a failing C toolchain must
not block installation.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "slidegrade.features._kernels",
                sources=["src/slidegrade/features/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
