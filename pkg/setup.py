import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # pure-Python install; nordwave.kernels falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "nordwave._kernels",
                ["src/nordwave/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # keep results bit-identical to the Python twins
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
