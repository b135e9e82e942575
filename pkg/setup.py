"""Build script for the optional compiled detrending kernel.

The package works without the extension: ``spreadfract.kernels`` falls back
to the vectorized numpy implementation when the compiled module is missing.
``optional=True`` keeps installation alive on hosts without a C toolchain.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "spreadfract._kernel_cy",
                ["src/spreadfract/_kernel_cy.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
