"""Build the compiled kernel core.

The package works without the extension (a pure-Python fallback is selected
at import time), but the compiled kernels are ~100x faster on large sweeps.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-python install, fallback module is used
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "pycloudiot._kernels",
                ["src/pycloudiot/_kernels.pyx"],
                # keep float results bit-identical with the Python fallback:
                # no contraction, no fast-math
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
