"""Build script: compiles the optional Cython tape executor.

The package works without the extension (pure-numpy fallback); a failed
extension build downgrades to a warning instead of aborting the install.
Set SPHEREOT_SKIP_EXT=1 to skip the compile step entirely.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            print(f"WARNING: compiled backend skipped ({exc}); "
                  "sphereot will use the pure-Python executor", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: could not build {ext.name}: {exc}", file=sys.stderr)


ext_modules = []
cmdclass = {}
if not os.environ.get("SPHEREOT_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        # -ffast-math lets gcc vectorize the exp/log1p loops via libmvec;
        # every transcendental in the tape takes pre-clamped arguments, so
        # the relaxed NaN/rounding assumptions are safe there.
        compile_args = ["-O3", "-ffast-math"]
        if not os.environ.get("SPHEREOT_PORTABLE"):
            compile_args.append("-march=native")
        ext_modules = cythonize(
            [
                Extension(
                    "sphereot.autodiff._tape_cy",
                    sources=["src/sphereot/autodiff/_tape_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=compile_args,
                    extra_link_args=["-lmvec", "-lm"],
                )
            ],
            language_level=3,
        )
        cmdclass["build_ext"] = OptionalBuildExt
    except ImportError as exc:
        print(f"WARNING: Cython/numpy unavailable ({exc}); building pure-Python only",
              file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass=cmdclass)
