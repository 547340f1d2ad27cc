"""Build script: compiles the optional kernel extension when Cython and a C
compiler are available, and degrades to the pure-Python backend otherwise."""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "modalmix._backend._kernels",
                ["src/modalmix/_backend/_kernels.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
