import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LIPCERT_NO_EXTENSION", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lipcert._kernels",
                ["src/lipcert/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
