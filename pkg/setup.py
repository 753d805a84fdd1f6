"""Build script: compiles the optional Cython kernel for embedding training.

The package works without the compiled extension (a pure-Python fallback is
selected at import time), so a missing compiler or Cython never blocks
installation.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext = Extension(
        "convrec.embeddings._sgns",
        ["src/convrec/embeddings/_sgns.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
