"""Build script for the optional compiled pixel-kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the per-frame compositing
and pooling hot loops cheaper on full-resolution footage.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bogp._kernels._native",
                ["src/bogp/_kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    import warnings

    warnings.warn("Cython/numpy not available; installing without the native kernels")
    ext_modules = []

setup(ext_modules=ext_modules)
