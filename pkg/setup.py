import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to numpy if the
# extension is missing.
setup(
    ext_modules=cythonize(
        [Extension("ancient_fbmcf._kernels", ["src/ancient_fbmcf/_kernels.pyx"],
                   include_dirs=[np.get_include()])],
        compiler_directives={"language_level": "3"},
    ),
)
