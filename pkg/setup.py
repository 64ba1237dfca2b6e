"""Build script for the optional compiled KNN kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile is not fatal to `pip install`.
"""
from setuptools import setup, Extension

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "swarmfe._knn_c",
                ["src/swarmfe/_knn_c.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
