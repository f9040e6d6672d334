"""Build hook for the optional compiled SDP kernel.

`pip install -e . --no-build-isolation` compiles ``qmimo.sdp._ipm_c``; if the
compiler or Cython is unavailable the package still installs and falls back
to the numpy kernel at import time.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "qmimo.sdp._ipm_c",
                ["src/qmimo/sdp/_ipm_c.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
