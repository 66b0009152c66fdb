"""Build glue for the optional compiled kernel.

The package is fully functional without the extension: posetforge.kernels
falls back to a bitset implementation when `_core` is missing or when
POSETFORGE_PURE=1 is set.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"warning: compiled kernel skipped ({exc}); pure fallback will be used", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: {ext.name} failed to build ({exc}); pure fallback will be used", file=sys.stderr)


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/posetforge/kernels/_core.pyx"],
        language_level=3,
    )
except ImportError:  # pragma: no cover
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
