"""Build hook for the optional compiled orbit kernel.

The package works without it: ``torsion._orbits_py`` is used whenever the
extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("TORSION_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("torsion._orbits", ["src/torsion/_orbits.pyx"])],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
