"""Build script for the optional Cython kernels.

The package works without them: ``odtq._backend`` falls back to the
pure-Python kernels when the extension is missing.
"""
import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class OptionalBuildExt(build_ext):
    """Keep installing when no compiler is available."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain specific
            print(f"warning: Cython kernels not built ({exc}); "
                  "using the pure-Python fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain specific
            print(f"warning: could not build {ext.name} ({exc})",
                  file=sys.stderr)


def extensions():
    if os.environ.get("ODTQ_NO_EXTENSIONS"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    exts = [
        Extension(
            "odtq._kernels",
            ["src/odtq/_kernels.pyx"],
            # no -ffast-math: summation order and IEEE semantics are part of
            # the determinism contract
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]
    return cythonize(exts, compiler_directives={
        "language_level": "3",
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
    })


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
