from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # build without the compiled core; the pure-Python kernels are used
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "aspire._kernels",
                ["src/aspire/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # keep a*b+c unfused so compiled and pure-Python trajectories match bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
