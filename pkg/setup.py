import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PHASETOPO_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("phasetopo._ckernels", ["src/phasetopo/_ckernels.pyx"],
                       extra_compile_args=["-O3"], language="c++")],
            language_level=3,
        )

setup(ext_modules=ext_modules)
