"""Build script: compiles the optional split-search kernel.

The compiled extension is a pure speedup; if Cython or a C compiler is
missing the install falls back to the numpy implementation selected at
import time in fakerank.scoring.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernel skipped ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "using pure-python kernel", file=sys.stderr)


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; using pure-python kernel",
              file=sys.stderr)
        return []
    return cythonize(
        [Extension("fakerank._split_kernel", ["src/fakerank/_split_kernel.pyx"])],
        language_level="3",
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
