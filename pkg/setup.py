from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "disorder._core",
        ["src/disorder/_core.pyx", "src/disorder/_kernels.c"],
        include_dirs=["src/disorder"],
        extra_compile_args=["-O2", "-pthread"],
        extra_link_args=["-pthread"],
    )
]

setup(
    # The compiled core is optional: without Cython the package installs in
    # pure-Python mode and the kernels fall back at import time.
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
