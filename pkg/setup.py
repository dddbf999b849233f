"""Build script: compiles the optional Cython LP kernel.

The package works without the extension (a pure NumPy fallback is selected
at import time); the compiled kernel is what makes full contingency sweeps
fast. Build failures therefore degrade to a warning, not an error.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install pure-Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or Cython missing
            sys.stderr.write(f"warning: LP kernel build skipped ({exc}); "
                             "falling back to pure-Python backend\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"warning: building {ext.name} failed ({exc}); "
                             "falling back to pure-Python backend\n")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("warning: Cython not available; "
                         "installing without the compiled LP kernel\n")
        return []
    ext = Extension(
        "gridrisk.lp._core",
        ["src/gridrisk/lp/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
