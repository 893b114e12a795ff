import warnings

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pvday.decomp._kernels",
                ["src/pvday/decomp/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    # Pure-python kernels are selected at import when the extension is absent.
    warnings.warn("Cython not available; building without the compiled kernel extension.")
    ext_modules = []

setup(ext_modules=ext_modules)
