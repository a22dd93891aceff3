import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FRONTMESH_NO_NATIVE") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext = Extension(
            "frontmesh._kernels._native",
            ["src/frontmesh/_kernels/_native.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # fp-contract off: the compiled kernels must match the pure
            # Python backend bit for bit, so no FMA fusion
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext_modules = cythonize([ext], language_level="3")
    except Exception as exc:  # pragma: no cover - build environment dependent
        print("native kernel build skipped: %s" % exc)
        ext_modules = []

setup(ext_modules=ext_modules)
