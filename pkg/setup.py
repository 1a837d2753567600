"""Build script: compiles the optional Cython kernel extension.

The extension is an accelerator only -- if Cython or a C compiler is
unavailable the install proceeds and the package falls back to the
numpy kernels at import time.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "barenblatt._kernels._cykernels",
                ["src/barenblatt/_kernels/_cykernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math: the taming formula relies on IEEE inf semantics
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"barenblatt: skipping Cython kernels ({exc}); "
                     "pure-python fallback will be used\n")
    ext_modules = []

setup(ext_modules=ext_modules)
