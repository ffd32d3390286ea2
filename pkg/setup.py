import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

# The compiled path kernel is optional: without a compiler (or Cython) the
# package falls back to the pure-Python twin in dunkl_lab/_core_py.py.


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled core not built ({exc}); using the Python fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using the Python fallback", file=sys.stderr)


def extensions():
    if os.environ.get("DUNKL_LAB_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    openmp = [] if os.environ.get("DUNKL_LAB_NO_OPENMP") else ["-fopenmp"]
    ext = Extension(
        "dunkl_lab._core",
        ["src/dunkl_lab/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"] + openmp,
        extra_link_args=openmp,
    )
    return cythonize([ext], language_level=3, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
