import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DYNLAB_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "dynlab._kernels._core",
                    ["src/dynlab/_kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # Pure-Python fallback kernels are selected at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
