"""Build script: compiles the walk-stepping kernel when Cython is available.

The package works without the extension (rwreld.kernels falls back to the
pure-Python implementation), so a failed/skipped build is not fatal.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rwreld._walkcore",
                ["src/rwreld/_walkcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
