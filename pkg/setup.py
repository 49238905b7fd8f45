"""Build shim for the compiled flow-stepping core."""

from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension("nettisa._fast", ["src/nettisa/_fast.pyx"]),
]

setup(ext_modules=cythonize(extensions, language_level=3))
