import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("TOPODETECT_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("topodetect._jacobi", ["src/topodetect/_jacobi.pyx"], optional=True)],
            language_level=3,
        )

setup(ext_modules=ext_modules)
