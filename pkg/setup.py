"""Build hook for the optional compiled kernels.

If Cython or a C compiler is missing, the package still installs and the
pure-Python kernels in ``torusgen._pykernels`` are used instead.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("TORUSGEN_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "torusgen._kernels",
                    ["src/torusgen/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
