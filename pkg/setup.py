import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    USE_CYTHON = True
except ImportError:
    USE_CYTHON = False


def _make_extension(name: str) -> Extension:
    path = "src/" + name.replace(".", "/")
    path += ".pyx" if USE_CYTHON else ".c"
    return Extension(
        name,
        [path],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )


EXTENSIONS = []
if not os.environ.get("THREADCRED_NO_EXT"):
    EXTENSIONS = [_make_extension("threadcred.learn._ckernels")]
    if USE_CYTHON:
        EXTENSIONS = cythonize(EXTENSIONS, compiler_directives={"language_level": "3"})

setup(ext_modules=EXTENSIONS)
