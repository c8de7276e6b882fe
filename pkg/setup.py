import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernel is a pure speedup; the package falls back to the
# numpy implementation when the extension is missing.  `optional=True`
# keeps installation working on hosts without a C toolchain, and
# FIRECAST_PURE_PYTHON=1 skips the build entirely.
extensions = []
if cythonize is not None and not os.environ.get("FIRECAST_PURE_PYTHON"):
    ext = Extension(
        "firecast._kernels",
        ["src/firecast/_kernels.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
    extensions = cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
