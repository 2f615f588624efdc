"""Build script for the optional compiled kernels.

    pip install -e . --no-build-isolation

If Cython or a C++ compiler is unavailable the package still installs and
``fppkit.kernels`` falls back to the pure-Python implementation.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FPPKIT_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fppkit._kernels",
                    ["src/fppkit/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    language="c++",
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
