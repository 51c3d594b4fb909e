"""Build the optional Cython kernels.

The package works without them (``lyapwander.kernels`` falls back to the
numpy implementation), so a failed or skipped compile is not fatal.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("LYAPWANDER_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "lyapwander._kernels",
                    ["src/lyapwander/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
