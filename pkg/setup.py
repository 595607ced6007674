"""Build script for the optional compiled backward-process kernel.

The extension is a speed-up only: if Cython or a C compiler is missing the
package falls back to the pure-Python engine at import time.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dynsir._engine_c",
                ["src/dynsir/_engine_c.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
