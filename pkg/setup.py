import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("BCOM_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "bcom._ckernels",
                    ["src/bcom/_ckernels.pyx"],
                    # fused multiply-add would break bit parity with the Python kernels
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
