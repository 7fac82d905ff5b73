import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback core is used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("BSLE_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "bsle._core",
                ["src/bsle/_core.pyx"],
                include_dirs=["src/bsle", numpy.get_include()],
                extra_compile_args=["-O3", "-fno-fast-math", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
