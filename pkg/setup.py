"""Build script: compiles the optional Cython kernels.

The package works without them; ``ultraspot.kernels`` falls back to the
pure-Python implementations when the extension is missing.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension(
            "ultraspot._ckernels",
            ["src/ultraspot/_ckernels.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O2"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )],
        compiler_directives=dict(
            language_level="3",
            boundscheck=False,
            wraparound=False,
            cdivision=True,
        ),
    )

setup(ext_modules=ext_modules)
