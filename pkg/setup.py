"""Build the optional compiled kernels.

The package works without them: ``oscbnf.kernels`` falls back to the
numpy implementation when the extension cannot be imported.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "oscbnf._ckernels",
                ["src/oscbnf/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"oscbnf: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
