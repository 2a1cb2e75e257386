"""Builds the optional compiled kernels; the package works without them."""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("ghsv._kernels", ["src/ghsv/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
