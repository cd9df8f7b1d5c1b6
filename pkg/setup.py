"""Build script for the optional compiled enumeration kernel.

The package is pure Python except for one hot loop (exhaustive primal
enumeration).  If Cython or a C compiler is unavailable the extension is
skipped and the numpy fallback is used at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "incdual._enumcore",
        sources=["src/incdual/_enumcore.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,  # build failure degrades to the numpy backend
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
