import os

from setuptools import Extension, setup

# The compiled cycle kernel is optional: if Cython is unavailable the package
# falls back to the pure-Python kernel at import time.
ext_modules = []
if os.environ.get("PDKKIT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("pdkkit._simkern", ["src/pdkkit/_simkern.pyx"])],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
