"""Build script: compiles the optional native kernel extension.

The extension accelerates the hot loops (batch 3x3 Jacobi eigensolver and
the coupled-ensemble triple-integral evaluator).  If no C compiler or
Cython is available the build degrades gracefully and the package runs on
the pure-numpy kernels instead.  Set RATIO_RMT_NO_NATIVE=1 to skip the
extension entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"WARNING: native kernel build skipped ({exc}); "
                  "falling back to pure-python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: could not build {ext.name} ({exc}); "
                  "falling back to pure-python kernels")


def make_ext_modules():
    if os.environ.get("RATIO_RMT_NO_NATIVE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; building without native kernels")
        return []
    ext = Extension(
        "ratio_rmt._kernels._native",
        ["src/ratio_rmt/_kernels/_native.pyx"],
        # keep fp semantics identical to the numpy kernels (no contraction)
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level="3")


setup(
    ext_modules=make_ext_modules(),
    cmdclass={"build_ext": OptionalBuildExt},
)
