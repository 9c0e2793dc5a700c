"""Build the optional compiled RANSAC kernel.

The package is fully functional without it (a NumPy fallback is selected at
import time), so a missing compiler or Cython only costs speed, not features.
-ffp-contract=off keeps the compiled arithmetic bit-compatible with the
fallback so both backends select identical RANSAC candidates.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernel skipped ({exc}); using the NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(
                f"building {ext.name} failed ({exc}); using the NumPy fallback"
            )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"compiled kernel skipped ({exc}); using the NumPy fallback")
        return []
    ext = Extension(
        "doppler_odom._kernels._native",
        ["src/doppler_odom/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
