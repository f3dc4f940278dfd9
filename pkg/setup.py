"""Build script: compiles the optional C kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so the build tolerates a missing Cython or C
compiler instead of failing the install.
"""

from setuptools import Extension, setup

extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "uavstream.kernels._ckernels",
                ["src/uavstream/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=extensions)
