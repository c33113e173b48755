"""Build the optional Cython kernels. The package falls back to pure Python if they are missing."""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("DWELLJSR_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        extensions = [
            Extension(
                "dwelljsr._kernels",
                ["src/dwelljsr/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"] if sys.platform != "win32" else ["/O2"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError as exc:  # pragma: no cover
        print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
