import os

from setuptools import setup

ext_modules = []
if os.environ.get("ACTORSNAP_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("actorsnap._kernels", ["src/actorsnap/_kernels.pyx"], extra_compile_args=["-O2"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
