"""Build hook for the optional compiled convolution kernels.

The package is fully functional without the extension: cwrank.kernels falls
back to the NumPy reference implementation when the compiled module is
missing. Set CWRANK_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CWRANK_SKIP_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "cwrank.kernels._ckernels",
                    ["src/cwrank/kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
