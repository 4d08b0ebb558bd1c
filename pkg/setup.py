import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "asynclik._kernels",
                ["src/asynclik/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
else:
    # Pure-python fallback is selected at import time; the package works
    # without the compiled extension.
    extensions = []

setup(ext_modules=extensions)
