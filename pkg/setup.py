import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MONOLAB_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # fall back to the numpy kernels
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "monolab._ckernels",
                    ["src/monolab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
